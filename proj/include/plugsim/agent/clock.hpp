#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace plugsim::agent {

using SteadyTime = std::chrono::steady_clock::time_point;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  // Wall instant at which the clock reads `ms`.
  virtual SteadyTime wall_at(std::int64_t ms) const = 0;
};

// Advanced explicitly by the lockstep harness.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override { return now_.load(); }
  SteadyTime wall_at(std::int64_t) const override { return std::chrono::steady_clock::now(); }
  void set(std::int64_t ms) { now_.store(ms); }

 private:
  std::atomic<std::int64_t> now_;
};

// Sim time running `speedup` times faster than the wall from `sim_start_ms`.
class PacedClock final : public Clock {
 public:
  PacedClock(std::int64_t sim_start_ms, double speedup)
      : start_ms_(sim_start_ms), speedup_(speedup), wall0_(std::chrono::steady_clock::now()) {}

  std::int64_t now_ms() const override {
    auto wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0_);
    return start_ms_ + static_cast<std::int64_t>(wall.count() * speedup_);
  }
  SteadyTime wall_at(std::int64_t ms) const override {
    auto offset = std::chrono::duration<double, std::milli>((ms - start_ms_) / speedup_);
    return wall0_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset);
  }
  double speedup() const noexcept { return speedup_; }

 private:
  std::int64_t start_ms_;
  double speedup_;
  SteadyTime wall0_;
};

// Unix epoch milliseconds.
class WallClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
  SteadyTime wall_at(std::int64_t ms) const override {
    return std::chrono::steady_clock::now() + std::chrono::milliseconds(ms - now_ms());
  }
};

}  // namespace plugsim::agent
