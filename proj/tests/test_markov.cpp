#include <gtest/gtest.h>

#include <fstream>

#include "edusim/io.hpp"
#include "edusim/markov.hpp"
#include "support.hpp"

using namespace edusim;

namespace {

std::shared_ptr<const StateGraph> hou_graph() {
  return std::make_shared<const StateGraph>(build_state_graph(testing_support::hou()));
}

ProbabilityAssignment fixture_probs() {
  std::ifstream in(testing_support::data_path("hou_probs.csv"));
  return read_assignment_csv(in);
}

// One compulsory module A, thesis after 1: start, active:A/A, eligible:A, dropout.
StateGraph single_module() {
  return build_state_graph(*parse_curriculum(
                                "program \"ONE\"\nmodule A level x compulsory year 1\n")
                                .curriculum);
}

ProbabilityAssignment single_module_probs(double advance, double repeat, double dropout) {
  return {{{"start", OutcomeKind::advance, "A"}, 1.0},
          {{"active:A/A", OutcomeKind::advance, ""}, advance},
          {{"active:A/A", OutcomeKind::repeat, ""}, repeat},
          {{"active:A/A", OutcomeKind::dropout, ""}, dropout}};
}

TransitionMatrix two_state() {
  TransitionMatrix m;
  m.order = {"a", "b"};
  m.P.resize(2, 2);
  m.P << 0.5, 0.5, 0.0, 1.0;
  return m;
}

// Same repeat/dropout/advance split at every active state, advance mass
// shared evenly.
ProbabilityAssignment flat(const StateGraph& g, double repeat, double dropout) {
  EdgeProbabilities p(g.edges().size(), 0.0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    std::size_t advances = 0;
    for (std::size_t e : g.out_edges(s)) advances += g.edges()[e].kind == OutcomeKind::advance;
    const bool active = g.state(s).tag == StateTag::active;
    for (std::size_t e : g.out_edges(s)) {
      const auto k = g.edges()[e].kind;
      p[e] = k == OutcomeKind::repeat    ? repeat
             : k == OutcomeKind::dropout ? dropout
                                         : (active ? 1.0 - repeat - dropout : 1.0) / advances;
    }
  }
  return to_assignment(g, p);
}

}  // namespace

TEST(BuildMatrix, TinyRowsSumToOne) {
  const auto g = build_state_graph(*parse_curriculum(testing_support::tiny_source()).curriculum);
  ProbabilityAssignment a{{{"start", OutcomeKind::advance, "A"}, 1.0}};
  for (const char* s : {"active:A/A", "active:A;B/B"}) {
    a[{s, OutcomeKind::dropout, ""}] = 0.1;
    a[{s, OutcomeKind::repeat, ""}] = 0.2;
  }
  a[{"active:A/A", OutcomeKind::advance, "B"}] = 0.7;
  a[{"active:A;B/B", OutcomeKind::advance, ""}] = 0.7;
  const auto m = build_matrix(g, a);
  ASSERT_EQ(m.P.rows(), 5);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(m.P.row(i).sum(), 1.0, 1e-12);
  auto at = [&](const char* from, const char* to) {
    return m.P(static_cast<Eigen::Index>(*g.find_id(from)), static_cast<Eigen::Index>(*g.find_id(to)));
  };
  EXPECT_EQ(at("eligible:A;B", "eligible:A;B"), 1.0);
  EXPECT_EQ(at("dropout", "dropout"), 1.0);
  EXPECT_DOUBLE_EQ(at("active:A/A", "active:A/A"), 0.2);
  EXPECT_DOUBLE_EQ(at("active:A/A", "dropout"), 0.1);
  EXPECT_DOUBLE_EQ(at("active:A/A", "active:A;B/B"), 0.7);
  EXPECT_DOUBLE_EQ(at("active:A/A", "eligible:A;B"), 0.0);
  EXPECT_DOUBLE_EQ(at("active:A;B/B", "eligible:A;B"), 0.7);
}

TEST(BuildMatrix, NonEdge) {
  const auto g = hou_graph();
  auto a = uniform_assignment(*g);
  a[{"start", OutcomeKind::advance, "51"}] = 0.1;
  try {
    build_matrix(*g, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "non-edge");
  }
  // A zero on a non-edge is harmless.
  a[{"start", OutcomeKind::advance, "51"}] = 0.0;
  EXPECT_NO_THROW(build_matrix(*g, a));
}

TEST(BuildMatrix, RowSumAndSign) {
  const auto g = hou_graph();
  auto a = uniform_assignment(*g);
  a[{"start", OutcomeKind::advance, "50"}] = 0.6;
  try {
    build_matrix(*g, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "row-sum");
  }
  a[{"start", OutcomeKind::advance, "50"}] = -0.5;
  a[{"start", OutcomeKind::advance, "50;51"}] = 1.5;
  try {
    build_matrix(*g, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "negative-probability");
  }
}

TEST(BuildMatrix, RowSumTolerance) {
  const auto g = hou_graph();
  auto a = uniform_assignment(*g);
  a[{"start", OutcomeKind::advance, "50"}] = 0.5 + 5e-10;
  EXPECT_NO_THROW(build_matrix(*g, a));
  a[{"start", OutcomeKind::advance, "50"}] = 0.5 + 5e-9;
  EXPECT_THROW(build_matrix(*g, a), Error);
}

TEST(BuildMatrix, NamedProbabilitiesLandInPlace) {
  const auto g = hou_graph();
  auto a = uniform_assignment(*g);
  a[{"start", OutcomeKind::advance, "50"}] = 0.7;       // P_A
  a[{"start", OutcomeKind::advance, "50;51"}] = 0.3;
  const std::string s50 = "active:50/50";
  a[{s50, OutcomeKind::dropout, ""}] = 0.11;              // P_B
  a[{s50, OutcomeKind::advance, "51;60"}] = 0.13;         // P_C
  a[{s50, OutcomeKind::advance, "51"}] = 0.17;            // P_D
  a[{s50, OutcomeKind::advance, "51;61"}] = 0.19;
  a[{s50, OutcomeKind::repeat, ""}] = 0.4;
  const auto m = build_matrix(*g, a);
  auto at = [&](const std::string& from, const std::string& to) {
    return m.P(static_cast<Eigen::Index>(*g->find_id(from)), static_cast<Eigen::Index>(*g->find_id(to)));
  };
  EXPECT_DOUBLE_EQ(at("start", s50), 0.7);
  EXPECT_DOUBLE_EQ(at(s50, "dropout"), 0.11);
  EXPECT_DOUBLE_EQ(at(s50, "active:50;51;60/51;60"), 0.13);
  EXPECT_DOUBLE_EQ(at(s50, "active:50;51/51"), 0.17);
}

TEST(Project, TwoStateAnalytic) {
  const auto m = two_state();
  const auto v = project({{100.0, 0.0}, 1}, m, 3);
  EXPECT_NEAR(v.v[0], 25.0, 1e-12);
  EXPECT_NEAR(v.v[1], 75.0, 1e-12);
  EXPECT_EQ(v.year_index, 3);
  const auto same = project({{100.0, 0.0}, 1}, m, 1);
  EXPECT_EQ(same.v, (std::vector<double>{100.0, 0.0}));
}

TEST(Project, Identity) {
  TransitionMatrix m;
  m.order = {"a", "b", "c"};
  m.P = Eigen::MatrixXd::Identity(3, 3);
  const PopulationVector v{{3.0, 1.5, 7.0}, 1};
  for (int n : {1, 2, 9}) EXPECT_EQ(project(v, m, n).v, v.v);
}

TEST(Project, DimensionMismatch) {
  try {
    project({{1.0, 2.0, 3.0}, 1}, two_state(), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "dimension-mismatch");
  }
}

TEST(Project, StepEqualsPowerAndConservesMass) {
  const auto g = hou_graph();
  const auto m = build_matrix(*g, fixture_probs());
  PopulationVector v1{std::vector<double>(g->size(), 0.0), 1};
  v1.v[g->start()] = 100.0;
  double absorbed_before = 0.0;
  for (int n = 1; n <= 50; ++n) {
    const auto a = project(v1, m, n);
    const auto b = project_by_power(v1, m, n);
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(a.v[i], b.v[i], 1e-9);
    EXPECT_NEAR(a.total(), 100.0, 1e-6 * 100.0);
    double absorbed = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i)
      if (g->absorbing(i)) absorbed += a.v[i];
    EXPECT_GE(absorbed, absorbed_before - 1e-12);
    absorbed_before = absorbed;
  }
}

TEST(Cohorts, IdentityAccumulates) {
  TransitionMatrix m;
  m.order = {"start", "x"};
  m.P = Eigen::MatrixXd::Identity(2, 2);
  CohortSchedule s{{{2020, 100.0}, {2021, 120.0}, {2022, 90.0}}};
  const auto out = project_cohorts(s, m, 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[2].year_index, 2022);
  EXPECT_DOUBLE_EQ(out[2].v[0], 310.0);
}

TEST(Cohorts, SingleCohortEqualsProject) {
  const auto g = hou_graph();
  const auto m = build_matrix(*g, fixture_probs());
  const auto out = project_cohorts(CohortSchedule{{{2030, 100.0}}}, m, 6);
  PopulationVector v1{std::vector<double>(g->size(), 0.0), 1};
  v1.v[g->start()] = 100.0;
  for (int n = 1; n <= 6; ++n) {
    const auto p = project(v1, m, n);
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(out[n - 1].v[i], p.v[i], 1e-12);
  }
}

TEST(Cohorts, Superposition) {
  const auto g = hou_graph();
  const auto m = build_matrix(*g, fixture_probs());
  const auto both = project_cohorts(CohortSchedule{{{2020, 100.0}, {2022, 100.0}}}, m, 7);
  const auto first = project_cohorts(CohortSchedule{{{2020, 100.0}}}, m, 7);
  const auto second = project_cohorts(CohortSchedule{{{2022, 100.0}}}, m, 5);
  for (int t = 0; t < 7; ++t) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double shifted = t >= 2 ? second[t - 2].v[i] : 0.0;
      EXPECT_NEAR(both[t].v[i], first[t].v[i] + shifted, 1e-9);
    }
  }
}

TEST(Cohorts, Linearity) {
  const auto g = hou_graph();
  const auto m = build_matrix(*g, fixture_probs());
  const auto a = project_cohorts(CohortSchedule{{{1, 10.0}, {2, 30.0}}}, m, 5);
  const auto b = project_cohorts(CohortSchedule{{{1, 25.0}, {2, 75.0}}}, m, 5);
  for (int t = 0; t < 5; ++t)
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(b[t].v[i], 2.5 * a[t].v[i], 1e-9);
}

TEST(Cohorts, Errors) {
  const auto m = two_state();
  EXPECT_THROW(project_cohorts(CohortSchedule{{{1, 1.0}}}, m, 0), Error);
  EXPECT_THROW(project_cohorts(CohortSchedule{{{1, -1.0}}}, m, 2), Error);
}

TEST(Loads, CurrentSelectionMembership) {
  const auto g = hou_graph();
  std::vector<double> v(g->size(), 0.0);
  v[*g->find_id("active:50/50")] = 100.0;
  auto loads = module_loads({{v, 1}}, *g);
  EXPECT_DOUBLE_EQ(loads[0]["50"], 100.0);
  for (const char* m : {"51", "60", "61", "62"}) EXPECT_DOUBLE_EQ(loads[0][m], 0.0);

  std::fill(v.begin(), v.end(), 0.0);
  v[*g->find_id("active:50;51;60/51;60")] = 40.0;
  loads = module_loads({{v, 1}}, *g);
  EXPECT_DOUBLE_EQ(loads[0]["51"], 40.0);
  EXPECT_DOUBLE_EQ(loads[0]["60"], 40.0);
  EXPECT_DOUBLE_EQ(loads[0]["50"], 0.0);
}

TEST(Absorption, SingleStateNoRepeat) {
  const auto g = single_module();
  const auto s = absorption_summary(build_matrix(g, single_module_probs(0.7, 0.0, 0.3)));
  const auto active = *g.find_id("active:A/A");
  EXPECT_NEAR(s.probability(active, *g.find_id("eligible:A")), 0.7, 1e-12);
  EXPECT_NEAR(s.probability(active, g.dropout()), 0.3, 1e-12);
  EXPECT_NEAR(s.expected_steps[*s.row_of(active)], 1.0, 1e-12);
}

TEST(Absorption, SingleStateWithRepeat) {
  const auto g = single_module();
  const auto s = absorption_summary(build_matrix(g, single_module_probs(0.5, 0.2, 0.3)));
  const auto active = *g.find_id("active:A/A");
  EXPECT_NEAR(s.probability(active, *g.find_id("eligible:A")), 0.625, 1e-12);
  EXPECT_NEAR(s.expected_steps[*s.row_of(active)], 1.25, 1e-12);
}

TEST(Absorption, NoDropoutMeansCertainGraduation) {
  const auto g = hou_graph();
  const auto s = absorption_summary(build_matrix(*g, flat(*g, 0.3, 0.0)));
  double graduation = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i)
    if (g->state(i).tag == StateTag::eligible) graduation += s.probability(g->start(), i);
  EXPECT_NEAR(graduation, 1.0, 1e-9);
}

// Absorption probabilities against the long-run limit of v P^n.
TEST(Absorption, AgreesWithLongProjection) {
  const auto g = hou_graph();
  const auto m = build_matrix(*g, fixture_probs());
  const auto s = absorption_summary(m);
  PopulationVector v1{std::vector<double>(g->size(), 0.0), 1};
  v1.v[g->start()] = 1.0;
  const auto limit = project(v1, m, 400);
  for (std::size_t a : s.absorbing) EXPECT_NEAR(s.probability(g->start(), a), limit.v[a], 1e-9);
  for (std::size_t r = 0; r < s.transient.size(); ++r) {
    double sum = 0.0;
    for (std::size_t a = 0; a < s.absorbing.size(); ++a)
      sum += s.probabilities(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a));
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Absorption, NonAbsorbingChain) {
  const auto g = single_module();
  try {
    absorption_summary(build_matrix(g, single_module_probs(0.0, 1.0, 0.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "non-absorbing");
  }
}
