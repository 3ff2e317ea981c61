#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edusim/markov.hpp"
#include "edusim/records.hpp"

namespace edusim {

struct EstimationConfig {
  double alpha = 1.0;   // pseudo-count added to every legal outcome
  double lambda = 1.0;  // yearly discount, weight = lambda^(reference - year)
  std::optional<int> reference_year;  // default: latest academic year seen
  std::optional<int> window;          // keep steps from years > reference - window
  // Rows used for states without evidence; uniform when a row is absent.
  ProbabilityAssignment defaults;
};

struct EstimationResult {
  ProbabilityAssignment assignment;
  std::vector<std::int64_t> visits;   // observed steps out of each state
  std::vector<double> evidence;       // discounted weight of those steps
  std::vector<std::string> defaulted; // states that fell back to defaults
  std::vector<Issue> rejected;        // one per unreplayable student
};

namespace estimation_detail {

struct Step {
  std::size_t edge;
  int year;  // academic year in which the step's origin state was occupied
};

}  // namespace estimation_detail

// Replays each student's yearly records as a walk on the graph and turns the
// observed advance/repeat/dropout frequencies into an assignment. Absence
// after a year counts as dropout (or graduation when the completed set is a
// completion set and everything passed) unless that year is the last one in
// the data, where the outcome is censored.
inline EstimationResult estimate_probabilities(const std::vector<EnrollmentRecord>& records,
                                               const StateGraph& g, const EstimationConfig& cfg) {
  if (cfg.alpha < 0.0) throw Error("invalid-alpha", "alpha must be >= 0");
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw Error("invalid-lambda", "lambda must be in (0,1]");

  const Program& program = g.program();
  std::map<std::string, std::map<int, const EnrollmentRecord*>> by_student;
  std::vector<Issue> rejected;
  std::map<std::string, bool> bad;
  int last_year = std::numeric_limits<int>::min();
  for (const auto& r : records) {
    last_year = std::max(last_year, r.academic_year);
    if (!by_student[r.student].emplace(r.academic_year, &r).second && !bad[r.student]) {
      bad[r.student] = true;
      rejected.push_back({"duplicate-year", "two records for the same year", r.student, 0});
    }
  }
  const int reference = cfg.reference_year.value_or(last_year);

  std::vector<double> counts(g.edges().size(), 0.0);
  EstimationResult out;
  out.visits.assign(g.size(), 0);
  out.evidence.assign(g.size(), 0.0);

  for (const auto& [student, years] : by_student) {
    if (bad[student]) continue;
    std::vector<estimation_detail::Step> steps;
    auto reject = [&](std::string code, std::string message) {
      rejected.push_back({std::move(code), std::move(message), student, 0});
    };

    const EnrollmentRecord* prev = nullptr;
    std::size_t state = g.start();
    bool ok = true;
    for (const auto& [year, rec] : years) {
      auto set = program.to_set(rec->enrolled());
      if (!set || set->empty()) {
        reject("unknown-module", "year " + std::to_string(year) + " names an unknown module");
        ok = false;
        break;
      }
      if (prev && year != prev->academic_year + 1) {
        reject("gap-year", "no enrollment in " + std::to_string(prev->academic_year + 1));
        ok = false;
        break;
      }
      std::optional<std::size_t> edge;
      if (!prev) {
        edge = g.find_edge(state, OutcomeKind::advance, *set);
      } else if (*set == g.state(state).current) {
        if (prev->all_passed()) {
          reject("inconsistent-outcome", "re-enrolled in passed modules in " + std::to_string(year));
          ok = false;
          break;
        }
        edge = g.find_edge(state, OutcomeKind::repeat, {});
      } else {
        if (!prev->all_passed()) {
          reject("mixed-outcome", "moved on without passing every module of " +
                                      std::to_string(prev->academic_year));
          ok = false;
          break;
        }
        edge = g.find_edge(state, OutcomeKind::advance, *set);
      }
      if (!edge) {
        reject("unreplayable", "enrollment " + program.format(*set) + " in " + std::to_string(year) +
                                   " is not a transition out of " + g.state_id(state));
        ok = false;
        break;
      }
      steps.push_back({*edge, prev ? prev->academic_year : year - 1});
      state = g.edges()[*edge].to;
      prev = rec;
    }
    if (!ok) continue;

    // Final observed year: graduation, dropout, or censored.
    if (prev->academic_year < last_year) {
      std::optional<std::size_t> edge;
      if (prev->all_passed() && program.is_completion_set(g.state(state).taken))
        edge = g.find_edge(state, OutcomeKind::advance, {});
      else
        edge = g.find_edge(state, OutcomeKind::dropout, {});
      if (edge) steps.push_back({*edge, prev->academic_year});
    }

    for (const auto& s : steps) {
      if (cfg.window && s.year <= reference - *cfg.window) continue;
      const double w = std::pow(cfg.lambda, reference - s.year);
      const std::size_t from = g.edges()[s.edge].from;
      counts[s.edge] += w;
      out.evidence[from] += w;
      out.visits[from] += 1;
    }
  }

  EdgeProbabilities p(g.edges().size(), 0.0);
  const ProbabilityAssignment uniform = uniform_assignment(g);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto& edges = g.out_edges(s);
    if (edges.empty()) continue;
    if (out.evidence[s] <= 0.0) {
      out.defaulted.push_back(g.state_id(s));
      bool from_config = false;
      for (std::size_t e : edges)
        if (cfg.defaults.count(key_of(g, g.edges()[e]))) from_config = true;
      const auto& source = from_config ? cfg.defaults : uniform;
      for (std::size_t e : edges) {
        auto it = source.find(key_of(g, g.edges()[e]));
        p[e] = it == source.end() ? 0.0 : it->second;
      }
      continue;
    }
    const double total = out.evidence[s] + cfg.alpha * static_cast<double>(edges.size());
    for (std::size_t e : edges) p[e] = (counts[e] + cfg.alpha) / total;
  }
  out.assignment = to_assignment(g, p);
  resolve(g, out.assignment);  // defaults must also form valid rows
  out.rejected = std::move(rejected);
  return out;
}

}  // namespace edusim
