// edusim command line: curriculum checks, path and graph listings,
// projections, simulation, estimation and the scenario service.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "edusim/dsl.hpp"
#include "edusim/estimation.hpp"
#include "edusim/graph_export.hpp"
#include "edusim/io.hpp"
#include "edusim/monte_carlo.hpp"
#include "edusim/scenario.hpp"
#include "edusim/service.hpp"
#include "edusim/store.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

namespace {

using namespace edusim;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUsage = 2;

// Thrown for unreadable inputs and bad option values.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  return in;
}

void print_issues(const std::string& file, const std::vector<ParseError>& list, const char* kind) {
  for (const auto& e : list)
    std::cerr << file << ':' << e.span.line << ':' << e.span.column << ": " << kind << ": " << e.code
              << ": " << e.message << '\n';
}

// Parses and compiles, printing diagnostics; nullopt when the file is invalid.
std::optional<Model> load_model(const std::string& file) {
  const auto source = slurp(file);
  auto parsed = parse_curriculum(source);
  print_issues(file, parsed.warnings, "warning");
  if (!parsed.ok()) {
    print_issues(file, parsed.errors, "error");
    return std::nullopt;
  }
  auto program = std::make_shared<const Program>(*parsed.curriculum);
  auto graph = std::make_shared<const StateGraph>(build_state_graph(program));
  return Model{program, graph};
}

ProbabilityAssignment load_assignment(const std::string& path) {
  auto in = open_input(path);
  return read_assignment_csv(in);
}

CohortSchedule load_schedule(const std::string& path) {
  auto in = open_input(path);
  return read_intakes_csv(in);
}

struct Options {
  std::string file;
  bool aggregate = false, dot = false, json = false, summary = false;
  std::string probs, intakes, loads_out, records, traces_out, store, out;
  int horizon = 1;
  std::int64_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double alpha = 1.0, lambda = 1.0;
  std::optional<int> reference_year, window;
  int port = 8080;
};

int cmd_validate(const Options& o) {
  auto source = slurp(o.file);
  auto parsed = parse_curriculum(source);
  print_issues(o.file, parsed.warnings, "warning");
  if (!parsed.ok()) {
    print_issues(o.file, parsed.errors, "error");
    return kInvalid;
  }
  const Program p(*parsed.curriculum);
  std::cout << "ok: " << parsed.curriculum->name << ", " << p.module_count() << " modules, "
            << p.completion_sets().size() << " completion sets\n";
  if (o.json) std::cout << serialize_curriculum(*parsed.curriculum);
  return kOk;
}

int cmd_paths(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  for (const auto& path : enumerate_paths(*model->program))
    std::cout << format_path(*model->program, path) << '\n';
  return kOk;
}

int cmd_graph(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  const auto& g = *model->graph;
  if (o.aggregate) {
    const auto a = aggregate_graph(g);
    std::cout << (o.dot ? graph_to_dot(a, g.program()) : graph_to_json(a, g.program()).dump(2) + "\n");
  } else {
    std::cout << (o.dot ? graph_to_dot(g) : graph_to_json(g).dump(2) + "\n");
  }
  return kOk;
}

int cmd_probs_template(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  write_assignment_csv(std::cout, *model->graph, uniform_assignment(*model->graph));
  return kOk;
}

int cmd_project(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  const auto& g = *model->graph;
  const auto a = load_assignment(o.probs);
  const auto schedule = load_schedule(o.intakes);
  if (o.json) {
    std::cout << projection_report(g, a, schedule, o.horizon).dump(2) << '\n';
    return kOk;
  }
  const auto m = build_matrix(g, a);
  const auto vectors = project_cohorts(schedule, m, o.horizon, g.start());
  write_populations_csv(std::cout, g, vectors);
  if (!o.loads_out.empty()) {
    std::ofstream out(o.loads_out);
    if (!out) throw UsageError("cannot write " + o.loads_out);
    write_loads_csv(out, vectors, module_loads(vectors, g));
  }
  return kOk;
}

SimulationConfig sim_config(const Options& o, bool traces) {
  SimulationConfig cfg;
  cfg.replicas = o.replicas;
  cfg.seed = o.seed;
  cfg.horizon = o.horizon;
  cfg.schedule = load_schedule(o.intakes);
  cfg.keep_traces = traces;
  cfg.threads = o.threads;
  return cfg;
}

int cmd_simulate(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  const auto& g = *model->graph;
  const auto a = load_assignment(o.probs);
  const auto r = simulate(g, a, sim_config(o, !o.traces_out.empty()));
  if (!o.traces_out.empty()) {
    std::ofstream out(o.traces_out);
    if (!out) throw UsageError("cannot write " + o.traces_out);
    for (const auto& t : r.traces) {
      nlohmann::json states = nlohmann::json::array();
      for (auto s : t.states) states.push_back(g.state_id(s));
      out << nlohmann::json{{"cohort_year", t.cohort_year}, {"replica", t.replica}, {"states", states}}
                 .dump()
          << '\n';
    }
  }
  if (o.json) {
    std::cout << simulation_to_json(r).dump(2) << '\n';
    return kOk;
  }
  if (o.summary) {
    // Mean absorbed mass in the final year.
    const auto& last = r.mean.back();
    double eligible = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s)
      if (g.state(s).tag == StateTag::eligible) eligible += last[s];
    std::cout << "replicas " << r.replicas << " seed " << r.seed << " year " << r.years.back()
              << ": eligible " << format_number(eligible) << ", dropout "
              << format_number(last[g.dropout()]) << '\n';
    return kOk;
  }
  std::cout << "year,state_id,mean,se\n";
  for (std::size_t t = 0; t < r.years.size(); ++t)
    for (std::size_t s = 0; s < g.size(); ++s)
      std::cout << r.years[t] << ',' << r.state_ids[s] << ',' << format_number(r.mean[t][s]) << ','
                << format_number(r.se[t][s]) << '\n';
  return kOk;
}

int cmd_synthesize(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  const auto records = generate_records(*model->graph, load_assignment(o.probs), sim_config(o, false));
  write_records_csv(std::cout, records);
  return kOk;
}

int cmd_estimate(const Options& o) {
  auto model = load_model(o.file);
  if (!model) return kInvalid;
  const auto& g = *model->graph;
  auto in = open_input(o.records);
  const auto records = read_records_csv(in);
  EstimationConfig cfg;
  cfg.alpha = o.alpha;
  cfg.lambda = o.lambda;
  cfg.reference_year = o.reference_year;
  cfg.window = o.window;
  if (!o.probs.empty()) cfg.defaults = load_assignment(o.probs);
  const auto r = estimate_probabilities(records, g, cfg);
  for (const auto& issue : r.rejected)
    std::cerr << "rejected " << issue.element << ": " << issue.code << ": " << issue.message << '\n';
  for (const auto& s : r.defaulted) std::cerr << "no evidence for " << s << ", using defaults\n";
  write_assignment_csv(std::cout, g, r.assignment);
  return kOk;
}

int cmd_serve(const Options& o) {
  ScenarioStore store(o.store);
  httplib::Server server;
  register_routes(server, store);
  std::cerr << "serving " << o.store << " on port " << o.port << '\n';
  if (!server.listen("0.0.0.0", o.port)) {
    std::cerr << "cannot listen on port " << o.port << '\n';
    return kUsage;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Student population estimation for self-paced degree programs"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Parse and validate a curriculum");
  validate->add_option("file", o.file, "Curriculum file")->required();
  validate->add_flag("--canonical", o.json, "Print the canonical form");

  auto* paths = app.add_subcommand("paths", "List admissible tuition paths");
  paths->add_option("file", o.file, "Curriculum file")->required();

  auto* graph = app.add_subcommand("graph", "Export the enrollment state graph");
  graph->add_option("file", o.file, "Curriculum file")->required();
  graph->add_flag("--aggregate", o.aggregate, "Cumulative-set view");
  graph->add_flag("--dot", o.dot, "Graphviz output instead of JSON");

  auto* templ = app.add_subcommand("probs-template", "Uniform probability CSV to fill in");
  templ->add_option("file", o.file, "Curriculum file")->required();

  auto* project = app.add_subcommand("project", "Project populations with the Markov chain");
  project->add_option("file", o.file, "Curriculum file")->required();
  project->add_option("--probs", o.probs, "Probability CSV")->required();
  project->add_option("--intakes", o.intakes, "Intake CSV")->required();
  project->add_option("--horizon", o.horizon, "Years to project")->required()->check(CLI::PositiveNumber);
  project->add_option("--loads", o.loads_out, "Write per-module loads CSV here");
  project->add_flag("--json", o.json, "Full JSON report");

  auto add_sim_options = [&](CLI::App* sub) {
    sub->add_option("file", o.file, "Curriculum file")->required();
    sub->add_option("--probs", o.probs, "Probability CSV")->required();
    sub->add_option("--intakes", o.intakes, "Intake CSV")->required();
    sub->add_option("--horizon", o.horizon, "Years to simulate")->required()->check(CLI::PositiveNumber);
    sub->add_option("--replicas", o.replicas, "Simulated students per cohort")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  };
  auto* sim = app.add_subcommand("simulate", "Monte Carlo per-student simulation");
  add_sim_options(sim);
  sim->add_flag("--json", o.json, "Full JSON result");
  sim->add_flag("--summary", o.summary, "One line of final-year totals");
  sim->add_option("--traces", o.traces_out, "Write student traces as NDJSON");

  auto* synth = app.add_subcommand("synthesize", "Generate synthetic enrollment records");
  add_sim_options(synth);

  auto* estimate = app.add_subcommand("estimate", "Estimate probabilities from records");
  estimate->add_option("file", o.file, "Curriculum file")->required();
  estimate->add_option("--records", o.records, "Records CSV")->required();
  estimate->add_option("--alpha", o.alpha, "Smoothing pseudo-count")->check(CLI::NonNegativeNumber);
  estimate->add_option("--lambda", o.lambda, "Yearly discount in (0,1]")->check(CLI::Range(0.0, 1.0));
  estimate->add_option("--reference-year", o.reference_year, "Year with weight 1");
  estimate->add_option("--window", o.window, "Keep only this many recent years")->check(CLI::PositiveNumber);
  estimate->add_option("--defaults", o.probs, "Probability CSV for states without evidence");

  auto* serve = app.add_subcommand("serve", "Run the HTTP scenario service");
  o.store = std::getenv("EDUSIM_STORE") ? std::getenv("EDUSIM_STORE") : "scenarios";
  if (const char* port = std::getenv("EDUSIM_PORT")) o.port = std::atoi(port);
  serve->add_option("--port", o.port, "Port (env EDUSIM_PORT)")->check(CLI::Range(1, 65535));
  serve->add_option("--store", o.store, "Store directory (env EDUSIM_STORE)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*paths) return cmd_paths(o);
    if (*graph) return cmd_graph(o);
    if (*templ) return cmd_probs_template(o);
    if (*project) return cmd_project(o);
    if (*sim) return cmd_simulate(o);
    if (*synth) return cmd_synthesize(o);
    if (*estimate) return cmd_estimate(o);
    if (*serve) return cmd_serve(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.code << ": " << e.what() << '\n';
    return kInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return kInvalid;
  }
  return kUsage;
}
