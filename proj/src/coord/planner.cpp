#include "plugsim/coord/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plugsim/error.hpp"

namespace plugsim::coord {

namespace {

int gap_slots(const PlanUnit& u, double slot_s) {
  return static_cast<int>(std::ceil(u.min_gap_s / slot_s - 1e-9));
}

bool is_multiple(double value, double of) {
  double ratio = value / of;
  return std::abs(ratio - std::round(ratio)) < 1e-9;
}

double peak_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

void add_cycle(std::vector<double>& agg, const std::vector<double>& profile, int start) {
  const std::size_t n = agg.size();
  for (std::size_t k = 0; k < profile.size(); ++k) {
    agg[(static_cast<std::size_t>(start) + k) % n] += profile[k];
  }
}

// Starts still placeable on the ring between already placed ones.
int free_capacity(const std::vector<int>& placed, int n, int gap) {
  if (placed.empty()) return n / gap;
  std::vector<int> sorted = placed;
  std::sort(sorted.begin(), sorted.end());
  int total = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    int next = i + 1 < sorted.size() ? sorted[i + 1] : sorted.front() + n;
    int arc = next - sorted[i];
    total += std::max(0, arc / gap - 1);
  }
  return total;
}

int circular_distance(int a, int b, int n) {
  int d = std::abs(a - b) % n;
  return std::min(d, n - d);
}

}  // namespace

std::string_view to_string(PlanMode mode) noexcept {
  return mode == PlanMode::Exhaustive ? "exhaustive" : "greedy";
}

PlanMode parse_plan_mode(std::string_view text) {
  if (text == "exhaustive" || text == "EXHAUSTIVE") return PlanMode::Exhaustive;
  if (text == "greedy" || text == "GREEDY") return PlanMode::Greedy;
  throw Error(Errc::ConfigInvalid, "mode: expected exhaustive or greedy, got '" + std::string(text) + "'");
}

void DefrostPlanProblem::validate() const {
  if (!(slot_s > 0) || !is_multiple(86400.0, slot_s)) {
    throw Error(Errc::InvalidParams, "slot_s must divide 86400");
  }
  const auto expected = static_cast<std::size_t>(std::llround(86400.0 / slot_s));
  if (background_w.size() != expected) {
    throw Error(Errc::InvalidParams, "background_w needs " + std::to_string(expected) + " slots, has " +
                                         std::to_string(background_w.size()));
  }
  for (double v : background_w) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidParams, "background_w is not finite");
  }
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const auto where = "unit '" + u.unit_id + "': ";
    for (std::size_t j = 0; j < i; ++j) {
      if (units[j].unit_id == u.unit_id) throw Error(Errc::InvalidParams, where + "duplicate unit_id");
    }
    if (u.cycles < 1) throw Error(Errc::InvalidParams, where + "cycles must be at least 1");
    if (!(u.duration_s > 0) || !is_multiple(u.duration_s, slot_s)) {
      throw Error(Errc::InvalidParams, where + "duration_s must be a multiple of slot_s");
    }
    if (u.min_gap_s < u.duration_s) throw Error(Errc::InvalidParams, where + "min_gap_s below duration_s");
    for (double w : u.power_template) {
      if (!(w >= 0) || !std::isfinite(w)) throw Error(Errc::InvalidParams, where + "template must be non-negative");
    }
    const int n = static_cast<int>(slots());
    const int gap = gap_slots(u, slot_s);
    if (static_cast<long long>(u.cycles) * gap > n) {
      throw Error(Errc::Infeasible, where + std::to_string(u.cycles) + " cycles with a " +
                                        std::to_string(u.min_gap_s) + " s gap do not fit in 24 h");
    }
  }
}

std::vector<double> template_slot_profile(const std::vector<double>& power_template, double slot_s,
                                          std::size_t slots) {
  const auto per_slot = static_cast<std::size_t>(std::llround(slot_s));
  std::vector<double> out((power_template.size() + per_slot - 1) / per_slot, 0.0);
  for (std::size_t i = 0; i < power_template.size(); ++i) out[i / per_slot] += power_template[i];
  for (double& v : out) v /= slot_s;
  if (out.size() > slots) {
    std::vector<double> folded(slots, 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) folded[k % slots] += out[k];
    return folded;
  }
  out.resize(slots, 0.0);
  return out;
}

std::vector<double> aggregate_profile(const DefrostPlanProblem& p, const DefrostPlan& plan) {
  std::vector<double> agg = p.background_w;
  for (const auto& unit : p.units) {
    auto it = plan.find(unit.unit_id);
    if (it == plan.end()) continue;
    auto profile = template_slot_profile(unit.power_template, p.slot_s, p.slots());
    for (int start : it->second) add_cycle(agg, profile, start);
  }
  return agg;
}

double evaluate_schedule(const DefrostPlanProblem& p, const DefrostPlan& plan) {
  return peak_of(aggregate_profile(p, plan));
}

bool is_feasible(const DefrostPlanProblem& p, const PlanUnit& unit, const std::vector<int>& starts) {
  const int n = static_cast<int>(p.slots());
  if (static_cast<int>(starts.size()) != unit.cycles) return false;
  if (!std::is_sorted(starts.begin(), starts.end())) return false;
  for (int s : starts) {
    if (s < 0 || s >= n) return false;
  }
  const int gap = gap_slots(unit, p.slot_s);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    int next = i + 1 < starts.size() ? starts[i + 1] : starts.front() + n;
    if (next - starts[i] < gap) return false;
  }
  return true;
}

std::vector<std::vector<int>> unit_candidates(const DefrostPlanProblem& p, const PlanUnit& unit,
                                              std::uint64_t limit) {
  const int n = static_cast<int>(p.slots());
  const int gap = gap_slots(unit, p.slot_s);
  const int k = unit.cycles;
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  current.reserve(static_cast<std::size_t>(k));

  auto rec = [&](auto&& self, int from) -> void {
    if (out.size() >= limit) return;
    if (static_cast<int>(current.size()) == k) {
      out.push_back(current);
      return;
    }
    const int remaining = k - static_cast<int>(current.size());
    // The last start must leave a full gap back around to the first.
    const int last_allowed = current.empty() ? n - 1 : std::min(n - 1, current.front() + n - gap);
    const int upper = last_allowed - (remaining - 1) * gap;
    for (int s = from; s <= upper; ++s) {
      current.push_back(s);
      self(self, s + gap);
      current.pop_back();
      if (out.size() >= limit) return;
    }
  };
  rec(rec, 0);
  return out;
}

namespace {

PlanResult finish(const DefrostPlanProblem& p, DefrostPlan plan, std::uint64_t candidates) {
  PlanResult r;
  r.schedule = std::move(plan);
  r.aggregate_w = aggregate_profile(p, r.schedule);
  r.achieved_peak_w = peak_of(r.aggregate_w);
  r.candidates = candidates;
  return r;
}

PlanResult plan_exhaustive(const DefrostPlanProblem& p) {
  const std::size_t units = p.units.size();
  std::vector<std::vector<std::vector<int>>> cands(units);
  std::uint64_t total = 1;
  for (std::size_t u = 0; u < units; ++u) {
    cands[u] = unit_candidates(p, p.units[u]);
    if (cands[u].empty()) throw Error(Errc::Infeasible, "unit '" + p.units[u].unit_id + "' has no feasible placement");
    const std::uint64_t c = cands[u].size();
    if (c > kExhaustiveGuard || total > kExhaustiveGuard / c) {
      throw Error(Errc::GuardExceeded, "exhaustive search exceeds " + std::to_string(kExhaustiveGuard) +
                                           " combinations; use greedy");
    }
    total *= c;
  }

  std::vector<std::vector<double>> profiles;
  for (const auto& u : p.units) profiles.push_back(template_slot_profile(u.power_template, p.slot_s, p.slots()));

  // layer[u] is the aggregate with units [0, u) placed, summed in declaration order.
  std::vector<std::vector<double>> layer(units + 1);
  layer[0] = p.background_w;
  std::vector<std::size_t> choice(units, 0);
  std::vector<std::size_t> best_choice;
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t evaluated = 0;

  auto rec = [&](auto&& self, std::size_t u) -> void {
    if (u == units) {
      ++evaluated;
      double peak = peak_of(layer[u]);
      if (peak < best) {
        best = peak;
        best_choice = choice;
      }
      return;
    }
    for (std::size_t c = 0; c < cands[u].size(); ++c) {
      layer[u + 1] = layer[u];
      for (int start : cands[u][c]) add_cycle(layer[u + 1], profiles[u], start);
      // Prune once the partial peak reaches the best.
      if (peak_of(layer[u + 1]) >= best) continue;
      choice[u] = c;
      self(self, u + 1);
    }
  };
  rec(rec, 0);

  DefrostPlan plan;
  for (std::size_t u = 0; u < units; ++u) plan[p.units[u].unit_id] = cands[u][best_choice[u]];
  return finish(p, std::move(plan), evaluated);
}

PlanResult plan_greedy(const DefrostPlanProblem& p) {
  const int n = static_cast<int>(p.slots());
  std::vector<std::size_t> order(p.units.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> peaks;
  for (const auto& u : p.units) peaks.push_back(peak_of(u.power_template));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return peaks[a] > peaks[b]; });

  std::vector<double> agg = p.background_w;
  DefrostPlan plan;
  std::uint64_t evaluated = 0;
  for (std::size_t idx : order) {
    const auto& unit = p.units[idx];
    const int gap = gap_slots(unit, p.slot_s);
    auto profile = template_slot_profile(unit.power_template, p.slot_s, p.slots());
    std::vector<int> placed;
    for (int cycle = 0; cycle < unit.cycles; ++cycle) {
      const int remaining_after = unit.cycles - cycle - 1;
      int best_slot = -1;
      double best_peak = std::numeric_limits<double>::infinity();
      for (int s = 0; s < n; ++s) {
        bool ok = std::all_of(placed.begin(), placed.end(),
                              [&](int q) { return circular_distance(s, q, n) >= gap && s != q; });
        if (!ok) continue;
        auto trial_placed = placed;
        trial_placed.push_back(s);
        if (free_capacity(trial_placed, n, gap) < remaining_after) continue;
        auto trial = agg;
        add_cycle(trial, profile, s);
        ++evaluated;
        double peak = peak_of(trial);
        if (peak < best_peak) {
          best_peak = peak;
          best_slot = s;
        }
      }
      if (best_slot < 0) throw Error(Errc::Infeasible, "unit '" + unit.unit_id + "': no slot for cycle " + std::to_string(cycle + 1));
      placed.push_back(best_slot);
      add_cycle(agg, profile, best_slot);
    }
    std::sort(placed.begin(), placed.end());
    plan[unit.unit_id] = std::move(placed);
  }
  return finish(p, std::move(plan), evaluated);
}

}  // namespace

PlanResult plan_defrost(const DefrostPlanProblem& p, PlanMode mode) {
  p.validate();
  return mode == PlanMode::Exhaustive ? plan_exhaustive(p) : plan_greedy(p);
}

std::vector<double> extract_defrost_template(const models::RefrigeratorParams& params, double duration_s) {
  params.validate();
  models::RefrigeratorState state;
  state.params = params;
  state.cabinet_c = 0.5 * (params.t_low_c + params.t_high_c);
  models::DefrostSchedule schedule{{{0.0, duration_s}}};
  std::vector<double> out;
  for (double t = 0; t < models::kSecondsPerDay; t += 1.0) {
    auto step = models::step_refrigerator(state, t, 1.0, schedule);
    if (t >= duration_s && step.state.mode == models::FridgeMode::Normal) break;
    out.push_back(step.power_w);
    state = step.state;
  }
  return out;
}

models::DefrostSchedule to_defrost_schedule(const std::vector<int>& starts, double slot_s, double duration_s) {
  models::DefrostSchedule s;
  for (int start : starts) s.windows.push_back({start * slot_s, duration_s});
  return s;
}

nlohmann::json plan_to_json(const PlanResult& result, const DefrostPlanProblem& p, PlanMode mode) {
  nlohmann::json schedule = nlohmann::json::object();
  for (const auto& unit : p.units) {
    auto it = result.schedule.find(unit.unit_id);
    if (it == result.schedule.end()) continue;
    nlohmann::json windows = nlohmann::json::array();
    for (int slot : it->second) {
      windows.push_back({{"slot", slot}, {"start_s", slot * p.slot_s}, {"duration_s", unit.duration_s}});
    }
    schedule[unit.unit_id] = std::move(windows);
  }
  return {{"mode", std::string(to_string(mode))},
          {"slot_s", p.slot_s},
          {"schedule", std::move(schedule)},
          {"achieved_peak_w", result.achieved_peak_w},
          {"candidates", result.candidates}};
}

}  // namespace plugsim::coord
