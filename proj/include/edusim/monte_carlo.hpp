#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "edusim/markov.hpp"
#include "edusim/philox.hpp"
#include "edusim/records.hpp"

namespace edusim {

struct SimulationConfig {
  std::int64_t replicas = 1000;  // simulated students per cohort
  std::uint64_t seed = 0;
  int horizon = 1;
  CohortSchedule schedule;
  bool keep_traces = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

// State index per calendar year from the intake year until the horizon ends.
struct StudentTrace {
  int cohort_year = 0;
  std::uint32_t replica = 0;
  std::vector<std::size_t> states;
};

// Counts are raw simulated students; means and standard errors are scaled by
// each cohort's intake (intake * fraction of replicas), so they estimate the
// same quantity as project_cohorts.
struct SimulationResult {
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<int> years;
  std::vector<std::string> state_ids;
  std::vector<std::string> module_codes;
  std::vector<std::vector<std::int64_t>> counts;  // [year][state]
  std::vector<std::vector<double>> mean;          // [year][state]
  std::vector<std::vector<double>> se;            // [year][state]
  std::vector<std::vector<double>> load_mean;     // [year][module]
  std::vector<std::vector<double>> load_se;       // [year][module]
  std::vector<StudentTrace> traces;

  bool operator==(const SimulationResult& o) const {
    auto same_traces = [&] {
      if (traces.size() != o.traces.size()) return false;
      for (std::size_t i = 0; i < traces.size(); ++i)
        if (traces[i].cohort_year != o.traces[i].cohort_year ||
            traces[i].replica != o.traces[i].replica || traces[i].states != o.traces[i].states)
          return false;
      return true;
    };
    return replicas == o.replicas && seed == o.seed && years == o.years &&
           state_ids == o.state_ids && counts == o.counts && mean == o.mean && se == o.se &&
           load_mean == o.load_mean && load_se == o.load_se && same_traces();
  }
};

namespace mc_detail {

// Picks the outgoing edge whose cumulative probability first exceeds u.
inline std::size_t sample_edge(const StateGraph& g, const EdgeProbabilities& p, std::size_t state,
                               double u) {
  const auto& out = g.out_edges(state);
  double cumulative = 0.0;
  std::size_t last_positive = out.front();
  for (std::size_t e : out) {
    if (p[e] <= 0.0) continue;
    cumulative += p[e];
    last_positive = e;
    if (u < cumulative) return e;
  }
  return last_positive;  // u beyond the rounded row total
}

// Walks one student for `steps` transitions from `from`; calls visit(step,
// state, edge) after each. Absorbed students stay put without drawing.
template <typename Visit>
void walk(const StateGraph& g, const EdgeProbabilities& p, std::uint64_t seed, int cohort_year,
          std::uint32_t replica, int steps, Visit&& visit) {
  std::size_t state = g.start();
  for (int t = 1; t <= steps; ++t) {
    std::optional<std::size_t> taken;
    if (!g.absorbing(state)) {
      const double u = student_uniform(seed, replica, cohort_year, static_cast<std::uint32_t>(t));
      const std::size_t e = sample_edge(g, p, state, u);
      taken = e;
      state = g.edges()[e].to;
    }
    visit(t, state, taken);
  }
}

inline void validate_config(const SimulationConfig& cfg) {
  if (cfg.replicas < 1) throw Error("invalid-replicas", "replicas must be >= 1");
  if (cfg.replicas > std::int64_t{1} << 32) throw Error("invalid-replicas", "replicas must fit in 32 bits");
  if (cfg.horizon < 1) throw Error("invalid-horizon", "horizon must be >= 1");
  for (const auto& [year, count] : cfg.schedule.intake)
    if (!(count >= 0.0)) throw Error("negative-intake", "negative intake in " + std::to_string(year));
}

}  // namespace mc_detail

// Per-student simulation of the chain. Identical inputs (seed included) give
// identical results for any thread count.
inline SimulationResult simulate(const StateGraph& g, const ProbabilityAssignment& a,
                                 const SimulationConfig& cfg) {
  mc_detail::validate_config(cfg);
  const EdgeProbabilities p = resolve(g, a);
  const int first = cfg.schedule.first_year();
  const int horizon = cfg.horizon;
  const std::size_t n_states = g.size();
  const std::size_t n_modules = g.program().module_count();

  std::vector<std::pair<int, double>> cohorts;
  for (const auto& [year, count] : cfg.schedule.intake)
    if (year >= first && year < first + horizon) cohorts.emplace_back(year, count);

  // counts[cohort][year][state]
  using Tally = std::vector<std::vector<std::vector<std::int64_t>>>;
  auto empty_tally = [&] {
    return Tally(cohorts.size(), std::vector<std::vector<std::int64_t>>(
                                     static_cast<std::size_t>(horizon),
                                     std::vector<std::int64_t>(n_states, 0)));
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, cfg.replicas));
  std::vector<Tally> partial(threads, empty_tally());
  std::vector<std::vector<StudentTrace>> partial_traces(threads);

  auto work = [&](unsigned w) {
    const std::int64_t lo = cfg.replicas * w / threads;
    const std::int64_t hi = cfg.replicas * (w + 1) / threads;
    auto& tally = partial[w];
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
      const int cohort_year = cohorts[c].first;
      const int offset = cohort_year - first;
      const int steps = horizon - 1 - offset;
      for (std::int64_t r = lo; r < hi; ++r) {
        const auto replica = static_cast<std::uint32_t>(r);
        tally[c][static_cast<std::size_t>(offset)][g.start()] += 1;
        StudentTrace trace{cohort_year, replica, {g.start()}};
        mc_detail::walk(g, p, cfg.seed, cohort_year, replica, steps,
                        [&](int t, std::size_t state, std::optional<std::size_t>) {
                          tally[c][static_cast<std::size_t>(offset + t)][state] += 1;
                          if (cfg.keep_traces) trace.states.push_back(state);
                        });
        if (cfg.keep_traces) partial_traces[w].push_back(std::move(trace));
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  Tally tally = empty_tally();
  for (const auto& part : partial)
    for (std::size_t c = 0; c < cohorts.size(); ++c)
      for (std::size_t y = 0; y < static_cast<std::size_t>(horizon); ++y)
        for (std::size_t s = 0; s < n_states; ++s) tally[c][y][s] += part[c][y][s];

  SimulationResult out;
  out.replicas = cfg.replicas;
  out.seed = cfg.seed;
  for (std::size_t s = 0; s < n_states; ++s) out.state_ids.push_back(g.state_id(s));
  for (std::size_t m = 0; m < n_modules; ++m) out.module_codes.push_back(g.program().code(m));
  const auto R = static_cast<double>(cfg.replicas);
  for (int y = 0; y < horizon; ++y) {
    const auto yi = static_cast<std::size_t>(y);
    out.years.push_back(first + y);
    std::vector<std::int64_t> counts(n_states, 0);
    std::vector<double> mean(n_states, 0.0), var(n_states, 0.0);
    std::vector<double> lmean(n_modules, 0.0), lvar(n_modules, 0.0);
    for (std::size_t c = 0; c < cohorts.size(); ++c) {
      const double intake = cohorts[c].second;
      std::vector<std::int64_t> module_hits(n_modules, 0);
      for (std::size_t s = 0; s < n_states; ++s) {
        const std::int64_t k = tally[c][yi][s];
        counts[s] += k;
        if (k == 0) continue;
        const double f = static_cast<double>(k) / R;
        mean[s] += intake * f;
        var[s] += intake * intake * f * (1.0 - f) / R;
        const auto& st = g.state(s);
        if (st.tag == StateTag::active)
          for (std::size_t m : st.current.indices()) module_hits[m] += k;
      }
      for (std::size_t m = 0; m < n_modules; ++m) {
        const double f = static_cast<double>(module_hits[m]) / R;
        lmean[m] += intake * f;
        lvar[m] += intake * intake * f * (1.0 - f) / R;
      }
    }
    std::vector<double> se(n_states), lse(n_modules);
    std::transform(var.begin(), var.end(), se.begin(), [](double v) { return std::sqrt(v); });
    std::transform(lvar.begin(), lvar.end(), lse.begin(), [](double v) { return std::sqrt(v); });
    out.counts.push_back(std::move(counts));
    out.mean.push_back(std::move(mean));
    out.se.push_back(std::move(se));
    out.load_mean.push_back(std::move(lmean));
    out.load_se.push_back(std::move(lse));
  }
  if (cfg.keep_traces) {
    for (auto& part : partial_traces)
      for (auto& t : part) out.traces.push_back(std::move(t));
    std::sort(out.traces.begin(), out.traces.end(), [](const StudentTrace& a, const StudentTrace& b) {
      return std::pair(a.cohort_year, a.replica) < std::pair(b.cohort_year, b.replica);
    });
  }
  return out;
}

// Synthetic enrollment records consistent with sampled traces. A year that
// ends in advance marks every current module pass, repeat marks them all
// fail, dropout marks them withdraw and the student disappears. The outcome of
// the final horizon year is drawn as well, so the last recorded year carries
// a real outcome even though the following year is not observed.
inline std::vector<EnrollmentRecord> generate_records(const StateGraph& g,
                                                      const ProbabilityAssignment& a,
                                                      const SimulationConfig& cfg) {
  mc_detail::validate_config(cfg);
  const EdgeProbabilities p = resolve(g, a);
  const int first = cfg.schedule.first_year();
  std::vector<EnrollmentRecord> out;
  for (const auto& [cohort_year, count] : cfg.schedule.intake) {
    if (cohort_year < first || cohort_year >= first + cfg.horizon) continue;
    const int steps = first + cfg.horizon - cohort_year;  // one past the horizon
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
      const auto replica = static_cast<std::uint32_t>(r);
      const std::string student = std::to_string(cohort_year) + "-" + std::to_string(r);
      std::optional<EnrollmentRecord> open;
      mc_detail::walk(g, p, cfg.seed, cohort_year, replica, steps,
                      [&](int t, std::size_t state, std::optional<std::size_t> edge) {
                        if (open && edge) {
                          const OutcomeKind k = g.edges()[*edge].kind;
                          const ModuleOutcome mark = k == OutcomeKind::advance ? ModuleOutcome::pass
                                                     : k == OutcomeKind::repeat ? ModuleOutcome::fail
                                                                                : ModuleOutcome::withdraw;
                          for (auto& [code, o] : open->outcomes) o = mark;
                          out.push_back(std::move(*open));
                          open.reset();
                        }
                        const int year = cohort_year + t;
                        const auto& st = g.state(state);
                        if (st.tag != StateTag::active || year >= first + cfg.horizon) return;
                        EnrollmentRecord rec{student, year, {}};
                        for (const auto& code : g.program().codes(st.current))
                          rec.outcomes[code] = ModuleOutcome::pass;
                        open = std::move(rec);
                      });
    }
  }
  return out;
}

}  // namespace edusim
