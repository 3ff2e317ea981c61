#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edusim/diagnostics.hpp"
#include "edusim/path_space.hpp"

namespace edusim {

inline constexpr double kRowSumTolerance = 1e-9;

// Identifies one outgoing edge in file-format terms.
struct OutcomeKey {
  std::string from_state;        // StateGraph::state_id
  OutcomeKind outcome = OutcomeKind::advance;
  std::string target_selection;  // "50;51", empty for repeat/dropout/graduation

  auto operator<=>(const OutcomeKey&) const = default;
  bool operator==(const OutcomeKey&) const = default;
};

// Sparse probability assignment; missing keys are zero.
using ProbabilityAssignment = std::map<OutcomeKey, double>;

// Probabilities aligned with StateGraph::edges().
using EdgeProbabilities = std::vector<double>;

inline OutcomeKey key_of(const StateGraph& g, const Edge& e) {
  return {g.state_id(e.from), e.kind, g.codes(e.selection)};
}

// Maps an assignment onto the graph's edges, rejecting probabilities on
// non-edges, values outside [0,1] and rows that do not sum to one.
inline EdgeProbabilities resolve(const StateGraph& g, const ProbabilityAssignment& a) {
  std::map<OutcomeKey, std::size_t> edge_of;
  for (std::size_t e = 0; e < g.edges().size(); ++e) edge_of.emplace(key_of(g, g.edges()[e]), e);

  EdgeProbabilities p(g.edges().size(), 0.0);
  for (const auto& [key, value] : a) {
    auto it = edge_of.find(key);
    if (it == edge_of.end()) {
      if (value == 0.0 && g.find_id(key.from_state)) continue;
      throw Error("non-edge", "probability assigned to non-edge " + key.from_state + " " +
                                  std::string(to_string(key.outcome)) + " {" +
                                  key.target_selection + "}");
    }
    if (!(value >= 0.0)) throw Error("negative-probability", "negative probability at " + key.from_state);
    if (value > 1.0) throw Error("probability-range", "probability above 1 at " + key.from_state);
    p[it->second] = value;
  }
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (g.out_edges(s).empty()) continue;
    double sum = 0.0;
    for (std::size_t e : g.out_edges(s)) sum += p[e];
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw Error("row-sum", "outcome probabilities of " + g.state_id(s) + " sum to " +
                                 std::to_string(sum));
  }
  return p;
}

// Full assignment (zeros included) in canonical edge order.
inline ProbabilityAssignment to_assignment(const StateGraph& g, const EdgeProbabilities& p) {
  ProbabilityAssignment a;
  for (std::size_t e = 0; e < g.edges().size(); ++e) a[key_of(g, g.edges()[e])] = p[e];
  return a;
}

// Equal mass on every outgoing edge; the starting point for filling in
// probabilities by hand.
inline ProbabilityAssignment uniform_assignment(const StateGraph& g) {
  EdgeProbabilities p(g.edges().size(), 0.0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto& out = g.out_edges(s);
    for (std::size_t e : out) p[e] = 1.0 / static_cast<double>(out.size());
  }
  return to_assignment(g, p);
}

struct TransitionMatrix {
  std::vector<std::string> order;  // canonical state ids
  Eigen::MatrixXd P;
  // Structural sinks (dropout, eligible). When empty, states with a unit
  // diagonal are taken as absorbing.
  std::vector<bool> absorbing;

  std::size_t size() const { return order.size(); }

  bool is_absorbing(std::size_t i) const {
    if (!absorbing.empty()) return absorbing[i];
    const auto k = static_cast<Eigen::Index>(i);
    return P(k, k) == 1.0;
  }
};

inline TransitionMatrix build_matrix(const StateGraph& g, const ProbabilityAssignment& a) {
  const EdgeProbabilities p = resolve(g, a);
  TransitionMatrix m;
  m.P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()),
                              static_cast<Eigen::Index>(g.size()));
  for (std::size_t s = 0; s < g.size(); ++s) {
    m.order.push_back(g.state_id(s));
    m.absorbing.push_back(g.absorbing(s));
    if (g.absorbing(s)) m.P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = 1.0;
  }
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const auto& edge = g.edges()[e];
    m.P(static_cast<Eigen::Index>(edge.from), static_cast<Eigen::Index>(edge.to)) += p[e];
  }
  return m;
}

// Expected head-counts per state. year_index 1 is the registration year.
struct PopulationVector {
  std::vector<double> v;
  int year_index = 1;

  double total() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
};

// One year forward: v P, accumulated in state order.
inline std::vector<double> step(const std::vector<double>& v, const Eigen::MatrixXd& P) {
  const auto n = static_cast<Eigen::Index>(v.size());
  std::vector<double> out(v.size(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double vi = v[static_cast<std::size_t>(i)];
    if (vi == 0.0) continue;
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] += vi * P(i, j);
  }
  return out;
}

inline void check_dimension(const std::vector<double>& v, const TransitionMatrix& m) {
  if (v.size() != m.size())
    throw Error("dimension-mismatch", "population vector has " + std::to_string(v.size()) +
                                          " entries, matrix has " + std::to_string(m.size()));
}

// v1 P^(n-1) by repeated vector-matrix products; n = 1 returns v1.
inline PopulationVector project(const PopulationVector& v1, const TransitionMatrix& m, int n) {
  check_dimension(v1.v, m);
  if (n < 1) throw Error("invalid-horizon", "projection year must be >= 1");
  PopulationVector out = v1;
  for (int k = 1; k < n; ++k) out.v = step(out.v, m.P);
  out.year_index = v1.year_index + n - 1;
  return out;
}

// P^k by binary exponentiation.
inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, int k) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  Eigen::MatrixXd base = P;
  while (k > 0) {
    if (k & 1) result = result * base;
    base = base * base;
    k >>= 1;
  }
  return result;
}

// Same quantity as project(), via a single matrix power.
inline PopulationVector project_by_power(const PopulationVector& v1, const TransitionMatrix& m,
                                         int n) {
  check_dimension(v1.v, m);
  if (n < 1) throw Error("invalid-horizon", "projection year must be >= 1");
  PopulationVector out = v1;
  out.v = step(v1.v, matrix_power(m.P, n - 1));
  out.year_index = v1.year_index + n - 1;
  return out;
}

// Annual intake keyed by calendar year.
struct CohortSchedule {
  std::map<int, double> intake;

  int first_year() const { return intake.empty() ? 0 : intake.begin()->first; }
};

// One vector per calendar year first_year .. first_year + horizon - 1, each
// the superposition of every admitted cohort pushed through P^(t - y).
// Intakes scheduled after the horizon do not contribute.
inline std::vector<PopulationVector> project_cohorts(const CohortSchedule& s,
                                                     const TransitionMatrix& m, int horizon,
                                                     std::size_t start_state = 0) {
  if (horizon < 1) throw Error("invalid-horizon", "horizon must be >= 1");
  for (const auto& [year, count] : s.intake)
    if (!(count >= 0.0)) throw Error("negative-intake", "negative intake in " + std::to_string(year));
  const int first = s.first_year();
  std::vector<PopulationVector> out;
  std::vector<double> v(m.size(), 0.0);
  for (int t = 0; t < horizon; ++t) {
    if (t > 0) v = step(v, m.P);
    if (auto it = s.intake.find(first + t); it != s.intake.end()) v[start_state] += it->second;
    out.push_back({v, first + t});
  }
  return out;
}

// load(m, t) = sum over active states whose current selection holds m.
inline std::vector<std::map<std::string, double>> module_loads(
    const std::vector<PopulationVector>& vectors, const StateGraph& g) {
  std::vector<std::map<std::string, double>> out;
  for (const auto& pv : vectors) {
    std::map<std::string, double> load;
    for (std::size_t i = 0; i < g.program().module_count(); ++i) load[g.program().code(i)] = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) {
      const auto& st = g.state(s);
      if (st.tag != StateTag::active) continue;
      for (std::size_t m : st.current.indices()) load[g.program().code(m)] += pv.v[s];
    }
    out.push_back(std::move(load));
  }
  return out;
}

// Standard absorbing-chain quantities: with Q the transient block and R the
// transient-to-absorbing block, N = (I - Q)^-1, B = N R, t = N 1.
struct AbsorptionSummary {
  std::vector<std::size_t> transient;
  std::vector<std::size_t> absorbing;
  Eigen::MatrixXd probabilities;   // transient x absorbing
  std::vector<double> expected_steps;

  std::optional<std::size_t> row_of(std::size_t state) const {
    for (std::size_t i = 0; i < transient.size(); ++i)
      if (transient[i] == state) return i;
    return std::nullopt;
  }
  double probability(std::size_t from_state, std::size_t to_state) const {
    auto r = row_of(from_state);
    if (!r) return from_state == to_state ? 1.0 : 0.0;
    for (std::size_t j = 0; j < absorbing.size(); ++j)
      if (absorbing[j] == to_state)
        return probabilities(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(j));
    return 0.0;
  }
};

inline AbsorptionSummary absorption_summary(const TransitionMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  AbsorptionSummary out;
  for (Eigen::Index i = 0; i < n; ++i)
    (m.is_absorbing(static_cast<std::size_t>(i)) ? out.absorbing : out.transient).push_back(static_cast<std::size_t>(i));
  if (out.absorbing.empty()) throw Error("non-absorbing", "chain has no absorbing state");

  // Every transient state must reach an absorbing one along positive entries.
  std::vector<bool> reaches(static_cast<std::size_t>(n), false);
  for (std::size_t a : out.absorbing) reaches[a] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i : out.transient) {
      if (reaches[i]) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (m.P(static_cast<Eigen::Index>(i), j) > 0.0 && reaches[static_cast<std::size_t>(j)]) {
          reaches[i] = changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t i : out.transient)
    if (!reaches[i]) throw Error("non-absorbing", "state " + m.order[i] + " never reaches absorption");

  const auto t = static_cast<Eigen::Index>(out.transient.size());
  const auto a = static_cast<Eigen::Index>(out.absorbing.size());
  Eigen::MatrixXd I_minus_Q = Eigen::MatrixXd::Identity(t, t);
  Eigen::MatrixXd R(t, a);
  for (Eigen::Index i = 0; i < t; ++i) {
    const auto si = static_cast<Eigen::Index>(out.transient[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < t; ++j)
      I_minus_Q(i, j) -= m.P(si, static_cast<Eigen::Index>(out.transient[static_cast<std::size_t>(j)]));
    for (Eigen::Index j = 0; j < a; ++j)
      R(i, j) = m.P(si, static_cast<Eigen::Index>(out.absorbing[static_cast<std::size_t>(j)]));
  }
  if (t > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(I_minus_Q);
    if (!lu.isInvertible()) throw Error("singular", "fundamental matrix is singular");
    out.probabilities = lu.solve(R);
    const Eigen::VectorXd steps = lu.solve(Eigen::VectorXd::Ones(t));
    out.expected_steps.assign(steps.data(), steps.data() + t);
  } else {
    out.probabilities = Eigen::MatrixXd(0, a);
  }
  return out;
}

}  // namespace edusim
