#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "edusim/curriculum.hpp"

namespace edusim {

// Sequence of yearly enrollment sets from registration to thesis eligibility.
struct TuitionPath {
  std::vector<ModuleSet> years;

  bool operator==(const TuitionPath&) const = default;
};

inline bool path_lex_less(const TuitionPath& a, const TuitionPath& b) {
  return std::lexicographical_compare(a.years.begin(), a.years.end(), b.years.begin(),
                                      b.years.end(), ModuleSetLexLess{});
}

// All admissible tuition paths in lexicographic order. A depth-first walk
// over admissible selections visits them in that order already.
inline std::vector<TuitionPath> enumerate_paths(const Program& program) {
  std::vector<TuitionPath> out;
  std::vector<ModuleSet> prefix;
  auto walk = [&](auto&& self, ModuleSet taken) -> void {
    if (program.is_completion_set(taken)) {
      out.push_back({prefix});
      return;
    }
    const int year = static_cast<int>(prefix.size()) + 1;
    for (ModuleSet d : program.admissible_selections(taken, year)) {
      prefix.push_back(d);
      self(self, taken | d);
      prefix.pop_back();
    }
  };
  walk(walk, ModuleSet{});
  return out;
}

inline std::string format_path(const Program& program, const TuitionPath& path) {
  std::string out = "[";
  for (std::size_t i = 0; i < path.years.size(); ++i) {
    if (i) out += ",";
    out += program.format(path.years[i]);
  }
  return out + "]";
}

enum class StateTag { start, active, eligible, dropout };

inline std::string_view to_string(StateTag t) {
  switch (t) {
    case StateTag::start: return "start";
    case StateTag::active: return "active";
    case StateTag::eligible: return "eligible";
    case StateTag::dropout: return "dropout";
  }
  return "?";
}

// Refined enrollment state: all modules selected so far plus this year's
// selection. Aggregates to the cumulative-set view via `taken`.
struct EnrollmentState {
  StateTag tag = StateTag::start;
  ModuleSet taken;
  ModuleSet current;

  bool operator==(const EnrollmentState&) const = default;
};

enum class OutcomeKind { advance, repeat, dropout };

inline std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::advance: return "advance";
    case OutcomeKind::repeat: return "repeat";
    case OutcomeKind::dropout: return "dropout";
  }
  return "?";
}

inline std::optional<OutcomeKind> parse_outcome_kind(std::string_view s) {
  if (s == "advance") return OutcomeKind::advance;
  if (s == "repeat") return OutcomeKind::repeat;
  if (s == "dropout") return OutcomeKind::dropout;
  return std::nullopt;
}

// `selection` is the next year's enrollment for advance edges; it is empty
// for repeat, dropout and for the final advance into an eligible state.
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  OutcomeKind kind = OutcomeKind::advance;
  ModuleSet selection;

  bool operator==(const Edge&) const = default;
};

namespace graph_detail {

// start < (|taken|, taken, current) < dropout
inline bool state_less(const EnrollmentState& a, const EnrollmentState& b) {
  auto rank = [](StateTag t) {
    return t == StateTag::start ? 0 : t == StateTag::dropout ? 2 : 1;
  };
  if (rank(a.tag) != rank(b.tag)) return rank(a.tag) < rank(b.tag);
  if (a.taken.size() != b.taken.size()) return a.taken.size() < b.taken.size();
  if (auto c = lex_compare(a.taken, b.taken); c != 0) return c < 0;
  return lex_compare(a.current, b.current) < 0;
}

inline bool edge_less(const Edge& a, const Edge& b) {
  if (a.from != b.from) return a.from < b.from;
  if (a.kind != b.kind) return a.kind < b.kind;
  if (auto c = lex_compare(a.selection, b.selection); c != 0) return c < 0;
  return a.to < b.to;
}

}  // namespace graph_detail

class StateGraph {
 public:
  StateGraph(std::shared_ptr<const Program> program, std::vector<EnrollmentState> states,
             std::vector<Edge> edges)
      : program_(std::move(program)), states_(std::move(states)), edges_(std::move(edges)) {
    out_.assign(states_.size(), {});
    for (std::size_t i = 0; i < edges_.size(); ++i) out_[edges_[i].from].push_back(i);
    for (std::size_t i = 0; i < states_.size(); ++i) ids_.emplace(state_id(i), i);
  }

  const Program& program() const { return *program_; }
  std::shared_ptr<const Program> program_ptr() const { return program_; }
  const std::vector<EnrollmentState>& states() const { return states_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return states_.size(); }
  const EnrollmentState& state(std::size_t i) const { return states_[i]; }

  // Edge indices leaving state i, in canonical edge order.
  const std::vector<std::size_t>& out_edges(std::size_t i) const { return out_[i]; }

  std::size_t start() const { return 0; }
  std::size_t dropout() const { return states_.size() - 1; }

  bool absorbing(std::size_t i) const {
    return states_[i].tag == StateTag::eligible || states_[i].tag == StateTag::dropout;
  }

  std::optional<std::size_t> find(const EnrollmentState& s) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), s, graph_detail::state_less);
    if (it == states_.end() || !(*it == s)) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
  }

  std::optional<std::size_t> find_id(std::string_view id) const {
    auto it = ids_.find(std::string(id));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_edge(std::size_t from, OutcomeKind kind,
                                       ModuleSet selection) const {
    for (std::size_t e : out_[from])
      if (edges_[e].kind == kind && edges_[e].selection == selection) return e;
    return std::nullopt;
  }

  // Stable textual identifiers used by every file format:
  //   start | dropout | eligible:50;51;60;61 | active:50;51;60/51;60
  std::string state_id(std::size_t i) const {
    const auto& s = states_[i];
    switch (s.tag) {
      case StateTag::start: return "start";
      case StateTag::dropout: return "dropout";
      case StateTag::eligible: return "eligible:" + codes(s.taken);
      case StateTag::active: return "active:" + codes(s.taken) + "/" + codes(s.current);
    }
    return {};
  }

  // "50;51" style, as used for target_selection columns.
  std::string codes(ModuleSet s) const { return detail::join(program_->codes(s), ";"); }

  std::string describe(std::size_t i) const {
    const auto& s = states_[i];
    switch (s.tag) {
      case StateTag::start: return "start";
      case StateTag::dropout: return "dropout";
      case StateTag::eligible: return "eligible" + program_->format(s.taken);
      case StateTag::active:
        return "(" + program_->format(s.taken) + ";" + program_->format(s.current) + ")";
    }
    return {};
  }

  std::size_t count(StateTag tag) const {
    return static_cast<std::size_t>(std::count_if(
        states_.begin(), states_.end(), [&](const EnrollmentState& s) { return s.tag == tag; }));
  }

 private:
  std::shared_ptr<const Program> program_;
  std::vector<EnrollmentState> states_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::unordered_map<std::string, std::size_t> ids_;
};

// Refined state graph over every enumerated path, plus one repeat self-edge
// and one dropout edge per active state. The start state has neither:
// registration implies a first-year enrollment.
inline StateGraph build_state_graph(std::shared_ptr<const Program> program) {
  const auto paths = enumerate_paths(*program);

  std::vector<EnrollmentState> states;
  states.push_back({StateTag::start, {}, {}});
  for (ModuleSet c : program->completion_sets()) states.push_back({StateTag::eligible, c, {}});
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (const auto& p : paths) {
    ModuleSet taken;
    for (ModuleSet d : p.years) {
      taken = taken | d;
      if (seen.emplace(taken.bits(), d.bits()).second)
        states.push_back({StateTag::active, taken, d});
    }
  }
  states.push_back({StateTag::dropout, {}, {}});
  std::sort(states.begin(), states.end(), graph_detail::state_less);

  auto index_of = [&](const EnrollmentState& s) {
    auto it = std::lower_bound(states.begin(), states.end(), s, graph_detail::state_less);
    return static_cast<std::size_t>(it - states.begin());
  };

  std::vector<Edge> edges;
  std::set<std::tuple<std::size_t, std::size_t, std::uint64_t>> advance_seen;
  auto add_advance = [&](std::size_t from, std::size_t to, ModuleSet sel) {
    if (advance_seen.emplace(from, to, sel.bits()).second)
      edges.push_back({from, to, OutcomeKind::advance, sel});
  };
  for (const auto& p : paths) {
    std::size_t from = 0;
    ModuleSet taken;
    for (ModuleSet d : p.years) {
      taken = taken | d;
      const std::size_t to = index_of({StateTag::active, taken, d});
      add_advance(from, to, d);
      from = to;
    }
    add_advance(from, index_of({StateTag::eligible, taken, {}}), ModuleSet{});
  }
  const std::size_t drop = states.size() - 1;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].tag != StateTag::active) continue;
    edges.push_back({i, i, OutcomeKind::repeat, {}});
    edges.push_back({i, drop, OutcomeKind::dropout, {}});
  }
  std::sort(edges.begin(), edges.end(), graph_detail::edge_less);
  return StateGraph(std::move(program), std::move(states), std::move(edges));
}

inline StateGraph build_state_graph(const Curriculum& c) {
  return build_state_graph(std::make_shared<const Program>(c));
}

// Cumulative-set view: the quotient under (taken, current) -> taken, with
// start and dropout kept apart.
struct AggregateNode {
  enum class Kind { start, set, dropout } kind = Kind::set;
  ModuleSet taken;
  bool sink = false;  // taken is a completion set

  bool operator==(const AggregateNode&) const = default;
};

struct AggregateLabel {
  OutcomeKind kind;
  ModuleSet selection;

  bool operator<(const AggregateLabel& o) const {
    if (kind != o.kind) return kind < o.kind;
    return lex_compare(selection, o.selection) < 0;
  }
  bool operator==(const AggregateLabel&) const = default;
};

struct AggregateEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<AggregateLabel> labels;  // sorted, unique
};

struct AggregateGraph {
  std::vector<AggregateNode> nodes;
  std::vector<AggregateEdge> edges;
  std::vector<std::size_t> node_of;  // refined state index -> node index

  std::optional<std::size_t> find_set(ModuleSet taken) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == AggregateNode::Kind::set && nodes[i].taken == taken) return i;
    return std::nullopt;
  }
};

inline AggregateGraph aggregate_graph(const StateGraph& g) {
  using Kind = AggregateNode::Kind;
  auto key_of = [&](const EnrollmentState& s) {
    if (s.tag == StateTag::start) return AggregateNode{Kind::start, {}, false};
    if (s.tag == StateTag::dropout) return AggregateNode{Kind::dropout, {}, false};
    return AggregateNode{Kind::set, s.taken, g.program().is_completion_set(s.taken)};
  };
  auto node_less = [](const AggregateNode& a, const AggregateNode& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.taken.size() != b.taken.size()) return a.taken.size() < b.taken.size();
    return lex_compare(a.taken, b.taken) < 0;
  };

  AggregateGraph out;
  for (const auto& s : g.states()) {
    auto k = key_of(s);
    if (std::find(out.nodes.begin(), out.nodes.end(), k) == out.nodes.end()) out.nodes.push_back(k);
  }
  std::sort(out.nodes.begin(), out.nodes.end(), node_less);
  for (const auto& s : g.states()) {
    auto k = key_of(s);
    out.node_of.push_back(static_cast<std::size_t>(
        std::find(out.nodes.begin(), out.nodes.end(), k) - out.nodes.begin()));
  }

  std::map<std::pair<std::size_t, std::size_t>, std::set<AggregateLabel>> merged;
  for (const auto& e : g.edges())
    merged[{out.node_of[e.from], out.node_of[e.to]}].insert({e.kind, e.selection});
  for (auto& [key, labels] : merged)
    out.edges.push_back({key.first, key.second, {labels.begin(), labels.end()}});
  return out;
}

}  // namespace edusim
