#pragma once

// JSON and Graphviz renderings of the refined and aggregate graphs. The JSON
// layout is described by docs/graph.schema.json.

#include <sstream>
#include <string>

#include <json.hpp>

#include "edusim/path_space.hpp"

namespace edusim {

inline nlohmann::json graph_to_json(const StateGraph& g) {
  using nlohmann::json;
  const Program& p = g.program();
  json states = json::array();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& s = g.state(i);
    states.push_back({{"id", g.state_id(i)},
                      {"tag", to_string(s.tag)},
                      {"taken", p.codes(s.taken)},
                      {"current", p.codes(s.current)}});
  }
  json edges = json::array();
  for (const auto& e : g.edges())
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"label", {{"outcome", to_string(e.kind)}, {"selection", p.codes(e.selection)}}}});
  return {{"view", "refined"}, {"states", states}, {"edges", edges}};
}

inline std::string aggregate_node_id(const Program& p, const AggregateNode& n) {
  switch (n.kind) {
    case AggregateNode::Kind::start: return "start";
    case AggregateNode::Kind::dropout: return "dropout";
    case AggregateNode::Kind::set: return "set:" + detail::join(p.codes(n.taken), ";");
  }
  return {};
}

inline nlohmann::json graph_to_json(const AggregateGraph& a, const Program& p) {
  using nlohmann::json;
  static constexpr const char* kinds[] = {"start", "set", "dropout"};
  json states = json::array();
  for (const auto& n : a.nodes)
    states.push_back({{"id", aggregate_node_id(p, n)},
                      {"kind", kinds[static_cast<int>(n.kind)]},
                      {"taken", p.codes(n.taken)},
                      {"sink", n.sink}});
  json edges = json::array();
  for (const auto& e : a.edges) {
    json labels = json::array();
    for (const auto& l : e.labels)
      labels.push_back({{"outcome", to_string(l.kind)}, {"selection", p.codes(l.selection)}});
    edges.push_back({{"from", e.from}, {"to", e.to}, {"labels", labels}});
  }
  return {{"view", "aggregate"}, {"states", states}, {"edges", edges}};
}

namespace export_detail {

inline std::string edge_style(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::advance: return "";
    case OutcomeKind::repeat: return ", style=dashed";
    case OutcomeKind::dropout: return ", style=dotted, color=gray50";
  }
  return "";
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace export_detail

inline std::string graph_to_dot(const StateGraph& g) {
  const Program& p = g.program();
  std::ostringstream out;
  out << "digraph refined {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& s = g.state(i);
    std::string label = g.describe(i);
    const bool bold = s.tag == StateTag::start || s.tag == StateTag::eligible;
    out << "  n" << i << " [label=\"" << export_detail::dot_escape(label) << "\""
        << (bold ? ", style=bold, shape=box" : "") << "];\n";
  }
  for (const auto& e : g.edges()) {
    std::string label = e.kind == OutcomeKind::advance ? detail::join(p.codes(e.selection), ",")
                                                       : std::string(to_string(e.kind));
    out << "  n" << e.from << " -> n" << e.to << " [label=\"" << export_detail::dot_escape(label)
        << "\"" << export_detail::edge_style(e.kind) << "];\n";
  }
  out << "}\n";
  return out.str();
}

inline std::string graph_to_dot(const AggregateGraph& a, const Program& p) {
  std::ostringstream out;
  out << "digraph aggregate {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& n = a.nodes[i];
    std::string label = n.kind == AggregateNode::Kind::set ? "state:" + detail::join(p.codes(n.taken), ",")
                                                           : aggregate_node_id(p, n);
    const bool bold = n.kind == AggregateNode::Kind::start || n.sink;
    out << "  n" << i << " [label=\"" << export_detail::dot_escape(label) << "\""
        << (bold ? ", style=bold, shape=box" : "") << "];\n";
  }
  for (const auto& e : a.edges) {
    std::string label;
    OutcomeKind style = OutcomeKind::advance;
    for (const auto& l : e.labels) {
      if (!label.empty()) label += " | ";
      label += l.kind == OutcomeKind::advance
                   ? (l.selection.empty() ? "eligible" : detail::join(p.codes(l.selection), ","))
                   : std::string(to_string(l.kind));
      style = std::max(style, l.kind);
    }
    out << "  n" << e.from << " -> n" << e.to << " [label=\"" << export_detail::dot_escape(label)
        << "\"" << export_detail::edge_style(style) << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace edusim
