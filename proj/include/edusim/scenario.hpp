#pragma once

// Scenarios tie a curriculum source, a probability assignment, an intake
// schedule and a horizon together. Everything the CLI and the HTTP service
// compute goes through the functions in this header, so both front ends
// produce byte-identical JSON for the same inputs.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edusim/dsl.hpp"
#include "edusim/graph_export.hpp"
#include "edusim/io.hpp"
#include "edusim/markov.hpp"
#include "edusim/monte_carlo.hpp"

namespace edusim {

// Error surfaced to API callers: HTTP status plus the {code, message,
// details[]} body.
struct ApiError : std::runtime_error {
  ApiError(int status, std::string code, const std::string& message,
           std::vector<std::string> details = {})
      : std::runtime_error(message),
        status(status),
        code(std::move(code)),
        details(std::move(details)) {}

  nlohmann::json body() const {
    return {{"code", code}, {"message", what()}, {"details", details}};
  }

  int status;
  std::string code;
  std::vector<std::string> details;
};

struct Scenario {
  std::string id;
  std::string name;
  std::string curriculum_source;
  ProbabilityAssignment assignment;
  CohortSchedule schedule;
  int horizon = 1;
  std::int64_t version = 0;
};

// Parsed curriculum and its state graph.
struct Model {
  std::shared_ptr<const Program> program;
  std::shared_ptr<const StateGraph> graph;
};

inline std::string format_parse_error(const ParseError& e) {
  return std::to_string(e.span.line) + ":" + std::to_string(e.span.column) + ": " + e.code + ": " +
         e.message;
}

inline Model compile_curriculum(std::string_view source) {
  auto parsed = parse_curriculum(source);
  if (!parsed.ok()) {
    std::vector<std::string> details;
    for (const auto& e : parsed.errors) details.push_back(format_parse_error(e));
    throw ApiError(422, "invalid-curriculum", parsed.errors.front().message, std::move(details));
  }
  auto program = std::make_shared<const Program>(*parsed.curriculum);
  auto graph = std::make_shared<const StateGraph>(build_state_graph(program));
  return {program, graph};
}

// Runs a library call, turning edusim::Error into a 422.
template <typename Fn>
auto unprocessable(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw ApiError(422, e.code(), e.what(), {e.what()});
  }
}

// ---------------------------------------------------------------------------
// JSON conversions

inline nlohmann::json assignment_to_json(const StateGraph& g, const ProbabilityAssignment& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : g.edges()) {
    const OutcomeKey k = key_of(g, e);
    auto it = a.find(k);
    rows.push_back({{"from_state_id", k.from_state},
                    {"outcome", to_string(k.outcome)},
                    {"target_selection", k.target_selection},
                    {"probability", it == a.end() ? 0.0 : it->second}});
  }
  return rows;
}

inline ProbabilityAssignment assignment_from_json(const nlohmann::json& rows) {
  if (!rows.is_array()) throw ApiError(422, "invalid-assignment", "assignment must be an array");
  ProbabilityAssignment a;
  for (const auto& r : rows) {
    if (!r.is_object() || !r.contains("from_state_id") || !r.contains("outcome") ||
        !r.contains("probability") || !r["probability"].is_number())
      throw ApiError(422, "invalid-assignment",
                     "assignment rows need from_state_id, outcome and numeric probability");
    auto kind = parse_outcome_kind(r["outcome"].get<std::string>());
    if (!kind) throw ApiError(422, "invalid-assignment", "unknown outcome " + r["outcome"].dump());
    OutcomeKey key{r["from_state_id"].get<std::string>(), *kind,
                   r.value("target_selection", std::string{})};
    if (!a.emplace(key, r["probability"].get<double>()).second)
      throw ApiError(422, "invalid-assignment", "duplicate outcome for " + key.from_state);
  }
  return a;
}

inline nlohmann::json schedule_to_json(const CohortSchedule& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [year, count] : s.intake) rows.push_back({{"year", year}, {"intake", count}});
  return rows;
}

inline CohortSchedule schedule_from_json(const nlohmann::json& rows) {
  if (!rows.is_array()) throw ApiError(422, "invalid-schedule", "schedule must be an array");
  CohortSchedule s;
  for (const auto& r : rows) {
    if (!r.is_object() || !r.contains("year") || !r["year"].is_number_integer() ||
        !r.contains("intake") || !r["intake"].is_number())
      throw ApiError(422, "invalid-schedule", "schedule rows need integer year and numeric intake");
    const double count = r["intake"].get<double>();
    if (count < 0) throw ApiError(422, "invalid-schedule", "intake must be >= 0");
    if (!s.intake.emplace(r["year"].get<int>(), count).second)
      throw ApiError(422, "invalid-schedule", "year listed twice");
  }
  return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s, const StateGraph& g) {
  return {{"id", s.id},
          {"name", s.name},
          {"version", s.version},
          {"curriculum_source", s.curriculum_source},
          {"horizon", s.horizon},
          {"schedule", schedule_to_json(s.schedule)},
          {"assignment", assignment_to_json(g, s.assignment)}};
}

// Builds a scenario from a request or stored document and checks it fully:
// the curriculum parses and validates, the assignment fits the derived
// graph, the horizon is positive. An absent assignment defaults to uniform
// rows.
inline std::pair<Scenario, Model> scenario_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ApiError(422, "invalid-scenario", "scenario must be a JSON object");
  if (!doc.contains("curriculum_source") || !doc["curriculum_source"].is_string())
    throw ApiError(422, "invalid-scenario", "curriculum_source is required");
  Scenario s;
  s.id = doc.value("id", std::string{});
  s.name = doc.value("name", std::string{});
  s.version = doc.value("version", std::int64_t{0});
  s.curriculum_source = doc["curriculum_source"].get<std::string>();
  if (doc.contains("horizon")) {
    if (!doc["horizon"].is_number_integer() || doc["horizon"].get<int>() < 1)
      throw ApiError(422, "invalid-horizon", "horizon must be a positive integer");
    s.horizon = doc["horizon"].get<int>();
  }
  if (doc.contains("schedule")) s.schedule = schedule_from_json(doc["schedule"]);

  Model model = compile_curriculum(s.curriculum_source);
  s.assignment = doc.contains("assignment") ? assignment_from_json(doc["assignment"])
                                            : uniform_assignment(*model.graph);
  const auto p = unprocessable([&] { return resolve(*model.graph, s.assignment); });
  s.assignment = to_assignment(*model.graph, p);
  return {std::move(s), std::move(model)};
}

// ---------------------------------------------------------------------------
// Projection

inline nlohmann::json absorption_to_json(const StateGraph& g, const TransitionMatrix& m) {
  AbsorptionSummary summary;
  try {
    summary = absorption_summary(m);
  } catch (const Error& e) {
    return {{"error", e.code()}, {"message", e.what()}};
  }
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < summary.transient.size(); ++i) {
    nlohmann::json eligible = nlohmann::json::object();
    double graduation = 0.0, dropout = 0.0;
    for (std::size_t j = 0; j < summary.absorbing.size(); ++j) {
      const double p = summary.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const std::size_t target = summary.absorbing[j];
      if (g.state(target).tag == StateTag::dropout) {
        dropout += p;
      } else {
        eligible[g.state_id(target)] = p;
        graduation += p;
      }
    }
    rows.push_back({{"state_id", g.state_id(summary.transient[i])},
                    {"graduation", graduation},
                    {"eligible", eligible},
                    {"dropout", dropout},
                    {"expected_years", summary.expected_steps[i]}});
  }
  return {{"states", rows}};
}

// The full projection document shared by `project --json` and
// POST /scenarios/{id}/project.
inline nlohmann::json projection_report(const StateGraph& g, const ProbabilityAssignment& a,
                                        const CohortSchedule& schedule, int horizon) {
  const TransitionMatrix m = unprocessable([&] { return build_matrix(g, a); });
  const auto vectors = unprocessable([&] { return project_cohorts(schedule, m, horizon, g.start()); });
  const auto loads = module_loads(vectors, g);

  nlohmann::json states = nlohmann::json::array();
  for (std::size_t s = 0; s < g.size(); ++s) states.push_back(g.state_id(s));
  nlohmann::json populations = nlohmann::json::array();
  nlohmann::json load_rows = nlohmann::json::array();
  for (std::size_t t = 0; t < vectors.size(); ++t) {
    populations.push_back({{"year", vectors[t].year_index}, {"values", vectors[t].v}});
    load_rows.push_back({{"year", vectors[t].year_index}, {"loads", loads[t]}});
  }
  return {{"horizon", horizon},
          {"first_year", schedule.first_year()},
          {"states", states},
          {"populations", populations},
          {"module_loads", load_rows},
          {"absorption", absorption_to_json(g, m)},
          {"effective_assignment", assignment_to_json(g, a)}};
}

enum class OverrideMode { strict, renormalize };

// Applies a partial assignment. strict: the caller's values replace the
// stored ones and every row must still sum to one. renormalize: within each
// touched row the untouched outcomes are scaled by
// (1 - overridden mass) / (their prior mass).
inline ProbabilityAssignment apply_overrides(const StateGraph& g, const ProbabilityAssignment& base,
                                             const ProbabilityAssignment& overrides,
                                             OverrideMode mode) {
  const EdgeProbabilities prior = unprocessable([&] { return resolve(g, base); });
  EdgeProbabilities p = prior;
  std::vector<bool> touched(g.edges().size(), false);
  std::vector<bool> row_touched(g.size(), false);
  for (const auto& [key, value] : overrides) {
    auto from = g.find_id(key.from_state);
    if (!from) throw ApiError(422, "unknown-state", "unknown state " + key.from_state);
    std::optional<std::size_t> edge;
    for (std::size_t e : g.out_edges(*from))
      if (key_of(g, g.edges()[e]) == key) edge = e;
    if (!edge)
      throw ApiError(422, "non-edge", "override targets a non-edge of " + key.from_state);
    if (!(value >= 0.0 && value <= 1.0))
      throw ApiError(422, "probability-range", "override probability must lie in [0,1]");
    p[*edge] = value;
    touched[*edge] = true;
    row_touched[*from] = true;
  }
  if (mode == OverrideMode::renormalize) {
    for (std::size_t s = 0; s < g.size(); ++s) {
      if (!row_touched[s]) continue;
      double fixed = 0.0, rest = 0.0;
      for (std::size_t e : g.out_edges(s)) {
        if (touched[e])
          fixed += p[e];
        else
          rest += prior[e];
      }
      if (fixed > 1.0 + kRowSumTolerance)
        throw ApiError(422, "row-sum", "overrides for " + g.state_id(s) + " exceed 1");
      if (rest > 0.0) {
        const double scale = (1.0 - fixed) / rest;
        for (std::size_t e : g.out_edges(s))
          if (!touched[e]) p[e] = prior[e] * scale;
      } else if (std::abs(1.0 - fixed) > kRowSumTolerance) {
        throw ApiError(422, "row-sum",
                       "cannot renormalize " + g.state_id(s) + ": no remaining outcome mass");
      }
    }
  }
  ProbabilityAssignment effective = to_assignment(g, p);
  unprocessable([&] { return resolve(g, effective); });
  return effective;
}

inline nlohmann::json run_projection(const Scenario& s, const Model& model,
                                     const nlohmann::json& overrides) {
  ProbabilityAssignment assignment = s.assignment;
  CohortSchedule schedule = s.schedule;
  int horizon = s.horizon;
  if (!overrides.is_null()) {
    if (!overrides.is_object()) throw ApiError(422, "invalid-overrides", "overrides must be an object");
    const std::string mode = overrides.value("mode", std::string("strict"));
    if (mode != "strict" && mode != "renormalize")
      throw ApiError(422, "invalid-overrides", "mode must be strict or renormalize");
    if (overrides.contains("assignment"))
      assignment = apply_overrides(*model.graph, assignment, assignment_from_json(overrides["assignment"]),
                                   mode == "strict" ? OverrideMode::strict : OverrideMode::renormalize);
    if (overrides.contains("schedule")) schedule = schedule_from_json(overrides["schedule"]);
    if (overrides.contains("horizon")) {
      if (!overrides["horizon"].is_number_integer() || overrides["horizon"].get<int>() < 1)
        throw ApiError(422, "invalid-horizon", "horizon must be a positive integer");
      horizon = overrides["horizon"].get<int>();
    }
  }
  return projection_report(*model.graph, assignment, schedule, horizon);
}

// ---------------------------------------------------------------------------
// Simulation

inline nlohmann::json simulation_to_json(const SimulationResult& r) {
  nlohmann::json out = {{"seed", r.seed},
                        {"replicas", r.replicas},
                        {"years", r.years},
                        {"states", r.state_ids},
                        {"modules", r.module_codes},
                        {"counts", r.counts},
                        {"mean", r.mean},
                        {"se", r.se},
                        {"load_mean", r.load_mean},
                        {"load_se", r.load_se}};
  return out;
}

inline SimulationConfig simulation_config_from_json(const nlohmann::json& body, const Scenario& s) {
  SimulationConfig cfg;
  cfg.horizon = s.horizon;
  cfg.schedule = s.schedule;
  if (body.is_null()) return cfg;
  if (!body.is_object()) throw ApiError(422, "invalid-config", "simulation config must be an object");
  if (body.contains("replicas")) {
    if (!body["replicas"].is_number_integer())
      throw ApiError(422, "invalid-replicas", "replicas must be an integer");
    cfg.replicas = body["replicas"].get<std::int64_t>();
  }
  if (body.contains("seed")) {
    const auto& seed = body["seed"];
    if (seed.is_number_unsigned())
      cfg.seed = seed.get<std::uint64_t>();
    else if (seed.is_string())
      cfg.seed = std::stoull(seed.get<std::string>());
    else
      throw ApiError(422, "invalid-seed", "seed must be a non-negative integer");
  }
  if (body.contains("horizon")) {
    if (!body["horizon"].is_number_integer())
      throw ApiError(422, "invalid-horizon", "horizon must be an integer");
    cfg.horizon = body["horizon"].get<int>();
  }
  if (body.contains("schedule")) cfg.schedule = schedule_from_json(body["schedule"]);
  if (cfg.replicas < 1) throw ApiError(422, "invalid-replicas", "replicas must be >= 1");
  if (cfg.horizon < 1) throw ApiError(422, "invalid-horizon", "horizon must be >= 1");
  return cfg;
}

inline nlohmann::json run_simulation(const Scenario& s, const Model& model, const SimulationConfig& cfg) {
  return simulation_to_json(unprocessable([&] { return simulate(*model.graph, s.assignment, cfg); }));
}

}  // namespace edusim
