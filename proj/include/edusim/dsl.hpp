#pragma once

// Line-oriented curriculum notation.
//
//   program "MSC-IS"
//   module 50 level junior compulsory year 1 first
//   module 60 level senior optional year 2
//   constraint hard 50 -> 60
//   constraint soft level:junior -> level:senior
//   choose 2 of {60, 61, 62}
//   rule max_per_year 2
//   rule thesis_after 4
//
// `#` starts a comment. Level endpoints expand to every module pair at
// parse time; duplicate edges collapse with hard taking precedence over soft.
// Omitted rules default to max_per_year = number of modules and
// thesis_after = compulsory modules + sum of choice counts.

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "edusim/curriculum.hpp"

namespace edusim {

struct SourceSpan {
  int line = 1;    // 1-based
  int column = 1;  // 1-based
  int length = 0;

  bool operator==(const SourceSpan&) const = default;
};

// Codes: unterminated-string, unknown-keyword, malformed-line,
// undefined-module, undefined-level, duplicate-declaration,
// missing-program, invalid-number, plus every validate_curriculum code.
// Warnings: duplicate-constraint and the curriculum_warnings codes.
struct ParseError {
  SourceSpan span;
  std::string code;
  std::string message;
};

struct ParseResult {
  std::optional<Curriculum> curriculum;  // set iff errors is empty
  std::vector<ParseError> errors;
  std::vector<ParseError> warnings;

  bool ok() const { return curriculum.has_value(); }
  bool has_error(std::string_view code) const {
    return std::any_of(errors.begin(), errors.end(),
                       [&](const ParseError& e) { return e.code == code; });
  }
};

namespace dsl_detail {

enum class TokKind { word, string, punct };

struct Token {
  TokKind kind;
  std::string text;
  int column;  // 1-based
  int length;  // in source characters
};

struct Line {
  int number;
  int length;
  std::vector<Token> tokens;
};

inline bool is_word_char(char c) {
  return !(c == ' ' || c == '\t' || c == '\r' || c == '{' || c == '}' || c == ',' ||
           c == '"' || c == '#');
}

class Lexer {
 public:
  explicit Lexer(std::vector<ParseError>& errors) : errors_(errors) {}

  std::vector<Line> run(std::string_view text) {
    std::vector<Line> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++number;
      Line line{number, static_cast<int>(end - pos), {}};
      lex_line(text.substr(pos, end - pos), line);
      if (!line.tokens.empty()) lines.push_back(std::move(line));
      if (end == text.size()) break;
      pos = end + 1;
    }
    return lines;
  }

 private:
  void lex_line(std::string_view s, Line& line) {
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      const int col = static_cast<int>(i) + 1;
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
      } else if (c == '#') {
        return;
      } else if (c == '{' || c == '}' || c == ',') {
        line.tokens.push_back({TokKind::punct, std::string(1, c), col, 1});
        ++i;
      } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
        line.tokens.push_back({TokKind::punct, "->", col, 2});
        i += 2;
      } else if (c == '"') {
        std::string value;
        std::size_t j = i + 1;
        bool closed = false;
        while (j < s.size()) {
          if (s[j] == '\\' && j + 1 < s.size()) {
            value += s[j + 1];
            j += 2;
          } else if (s[j] == '"') {
            closed = true;
            ++j;
            break;
          } else {
            value += s[j++];
          }
        }
        if (!closed) {
          errors_.push_back({{line.number, col, static_cast<int>(s.size() - i)},
                             "unterminated-string",
                             "string literal is not closed"});
          return;
        }
        line.tokens.push_back({TokKind::string, value, col, static_cast<int>(j - i)});
        i = j;
      } else {
        std::size_t j = i;
        while (j < s.size() && is_word_char(s[j]) &&
               !(s[j] == '-' && j + 1 < s.size() && s[j + 1] == '>' && j > i))
          ++j;
        line.tokens.push_back(
            {TokKind::word, std::string(s.substr(i, j - i)), col, static_cast<int>(j - i)});
        i = j;
      }
    }
  }

  std::vector<ParseError>& errors_;
};

inline std::optional<int> to_int(const std::string& s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

class Parser {
 public:
  ParseResult run(std::string_view text) {
    ParseResult result;
    Lexer lexer(result.errors);
    lines_ = lexer.run(text);
    errors_ = &result.errors;
    warnings_ = &result.warnings;

    for (const auto& line : lines_) declare(line);
    if (!program_line_) {
      error(SourceSpan{1, 1, 0}, "missing-program", "file must start with a program declaration");
    }
    for (const auto& line : lines_) relate(line);
    finish();

    // Structural validation on whatever parsed cleanly.
    auto checked = validate_curriculum(curriculum_);
    for (const auto& issue : checked.issues()) error(span_for(issue), issue.code, issue.message);

    if (result.errors.empty()) {
      for (const auto& w : curriculum_warnings(curriculum_))
        warn(span_for(w), w.code, w.message);
      result.curriculum = std::move(curriculum_);
    }
    return result;
  }

 private:
  void error(SourceSpan span, std::string code, std::string message) {
    errors_->push_back({span, std::move(code), std::move(message)});
  }
  void warn(SourceSpan span, std::string code, std::string message) {
    warnings_->push_back({span, std::move(code), std::move(message)});
  }

  static SourceSpan whole(const Line& l) { return {l.number, 1, l.length}; }
  static SourceSpan at(const Line& l, const Token& t) { return {l.number, t.column, t.length}; }

  void malformed(const Line& l, const std::string& expected) {
    error(whole(l), "malformed-line", "malformed line, expected " + expected);
  }

  // Pass 1: program, modules, rules.
  void declare(const Line& l) {
    const auto& t = l.tokens;
    const std::string& kw = t[0].text;
    if (t[0].kind != TokKind::word) {
      error(at(l, t[0]), "unknown-keyword", "unexpected '" + kw + "' at start of line");
      return;
    }
    if (kw == "program") {
      if (t.size() != 2 || t[1].kind != TokKind::string) return malformed(l, "program \"NAME\"");
      if (program_line_) {
        error(whole(l), "duplicate-declaration", "program declared more than once");
        return;
      }
      program_line_ = l.number;
      curriculum_.name = t[1].text;
    } else if (kw == "module") {
      parse_module(l);
    } else if (kw == "rule") {
      parse_rule(l);
    } else if (kw != "constraint" && kw != "choose") {
      error(at(l, t[0]), "unknown-keyword", "unknown keyword '" + kw + "'");
    }
  }

  void parse_module(const Line& l) {
    const auto& t = l.tokens;
    const char* shape = "module CODE level IDENT compulsory|optional year INT [first] [last]";
    if (t.size() < 7 || t[1].kind != TokKind::word || t[2].text != "level" ||
        t[3].kind != TokKind::word || (t[4].text != "compulsory" && t[4].text != "optional") ||
        t[5].text != "year" || t[6].kind != TokKind::word)
      return malformed(l, shape);
    ModuleDef m;
    m.code = t[1].text;
    m.level = t[3].text;
    m.compulsory = t[4].text == "compulsory";
    auto year = to_int(t[6].text);
    if (!year) {
      error(at(l, t[6]), "invalid-number", "year must be an integer");
      return;
    }
    m.nominal_year = *year;
    for (std::size_t i = 7; i < t.size(); ++i) {
      if (t[i].text == "first" && !m.first_marker)
        m.first_marker = true;
      else if (t[i].text == "last" && !m.last_marker)
        m.last_marker = true;
      else
        return malformed(l, shape);
    }
    if (module_lines_.count(m.code)) {
      error(at(l, t[1]), "duplicate-declaration", "module " + m.code + " declared more than once");
      return;
    }
    module_lines_[m.code] = l.number;
    curriculum_.modules.push_back(std::move(m));
  }

  void parse_rule(const Line& l) {
    const auto& t = l.tokens;
    if (t.size() != 3 || (t[1].text != "max_per_year" && t[1].text != "thesis_after"))
      return malformed(l, "rule max_per_year|thesis_after INT");
    auto value = to_int(t[2].text);
    if (!value) {
      error(at(l, t[2]), "invalid-number", "rule value must be an integer");
      return;
    }
    if (rule_lines_.count(t[1].text)) {
      error(whole(l), "duplicate-declaration", "rule " + t[1].text + " declared more than once");
      return;
    }
    rule_lines_[t[1].text] = l.number;
    rule_values_[t[1].text] = *value;
  }

  // Pass 2: constraints and choice groups, which reference modules.
  void relate(const Line& l) {
    if (l.tokens[0].kind != TokKind::word) return;
    if (l.tokens[0].text == "constraint") parse_constraint(l);
    if (l.tokens[0].text == "choose") parse_choice(l);
  }

  // Resolves CODE or level:IDENT starting at t[i]; advances i and records
  // whether a level endpoint was seen.
  std::optional<std::vector<std::string>> endpoint(const Line& l, std::size_t& i, bool& level_seen) {
    const auto& t = l.tokens;
    if (i >= t.size() || t[i].kind != TokKind::word) return std::nullopt;
    std::string text = t[i].text;
    const Token& tok = t[i];
    ++i;
    if (text.rfind("level:", 0) == 0) {
      level_seen = true;
      std::string level = text.substr(6);
      if (level.empty()) {
        if (i >= t.size() || t[i].kind != TokKind::word) return std::nullopt;
        level = t[i++].text;
      }
      std::vector<std::string> out;
      for (const auto& m : curriculum_.modules)
        if (m.level == level) out.push_back(m.code);
      if (out.empty()) {
        error(at(l, tok), "undefined-level", "no module has level " + level);
        return std::vector<std::string>{};
      }
      return out;
    }
    if (!module_lines_.count(text)) {
      error(at(l, tok), "undefined-module", "undefined module " + text);
      return std::vector<std::string>{};
    }
    return std::vector<std::string>{text};
  }

  void parse_constraint(const Line& l) {
    const auto& t = l.tokens;
    const char* shape = "constraint hard|soft ENDPOINT -> ENDPOINT";
    if (t.size() < 5 || (t[1].text != "hard" && t[1].text != "soft")) return malformed(l, shape);
    const Precedence kind = t[1].text == "hard" ? Precedence::hard : Precedence::soft;
    std::size_t i = 2;
    bool group = false;
    auto from = endpoint(l, i, group);
    if (!from || i >= t.size() || t[i].text != "->") return malformed(l, shape);
    ++i;
    auto to = endpoint(l, i, group);
    if (!to || i != t.size()) return malformed(l, shape);
    for (const auto& p : *from) {
      for (const auto& a : *to) {
        if (p == a && group) continue;
        auto key = std::make_pair(p, a);
        auto it = edges_.find(key);
        if (it == edges_.end()) {
          edges_[key] = {kind, l.number, group};
          continue;
        }
        // A level rule overlapping explicit edges is ordinary; only two
        // explicit declarations of the same pair are worth a warning.
        if (!group && !it->second.from_level)
          warn(whole(l), "duplicate-constraint",
               "constraint " + p + " -> " + a + " already declared on line " +
                   std::to_string(it->second.line) +
                   (it->second.kind != kind ? "; hard precedence kept" : ""));
        if (kind == Precedence::hard) it->second = {kind, l.number, group && it->second.from_level};
      }
    }
  }

  void parse_choice(const Line& l) {
    const auto& t = l.tokens;
    const char* shape = "choose INT of {CODE, ...}";
    if (t.size() < 5 || t[2].text != "of" || t[3].text != "{" || t.back().text != "}")
      return malformed(l, shape);
    auto k = to_int(t[1].text);
    if (!k) {
      error(at(l, t[1]), "invalid-number", "choice count must be an integer");
      return;
    }
    ChoiceGroup g;
    g.required_count = *k;
    bool expect_code = true;
    bool defined = true;
    for (std::size_t i = 4; i + 1 < t.size(); ++i) {
      if (expect_code) {
        if (t[i].kind != TokKind::word) return malformed(l, shape);
        if (!module_lines_.count(t[i].text)) {
          error(at(l, t[i]), "undefined-module", "undefined module " + t[i].text);
          defined = false;
        }
        g.members.push_back(t[i].text);
      } else if (t[i].text != ",") {
        return malformed(l, shape);
      }
      expect_code = !expect_code;
    }
    if (expect_code) return malformed(l, shape);  // empty list or trailing comma
    if (!defined) return;
    std::sort(g.members.begin(), g.members.end());
    group_lines_.push_back(l.number);
    curriculum_.choice_groups.push_back(std::move(g));
  }

  void finish() {
    auto& c = curriculum_;
    std::sort(c.modules.begin(), c.modules.end(),
              [](const ModuleDef& a, const ModuleDef& b) { return a.code < b.code; });
    for (const auto& [key, info] : edges_) c.constraints.push_back({info.kind, key.first, key.second});
    std::sort(c.constraints.begin(), c.constraints.end());
    std::sort(c.choice_groups.begin(), c.choice_groups.end());

    int compulsory = 0, chosen = 0;
    for (const auto& m : c.modules) compulsory += m.compulsory ? 1 : 0;
    for (const auto& g : c.choice_groups) chosen += g.required_count;
    c.rules.max_modules_per_year = rule_values_.count("max_per_year")
                                       ? rule_values_["max_per_year"]
                                       : static_cast<int>(c.modules.size());
    c.rules.modules_required_for_thesis =
        rule_values_.count("thesis_after") ? rule_values_["thesis_after"] : compulsory + chosen;
  }

  SourceSpan line_span(int number) const {
    for (const auto& l : lines_)
      if (l.number == number) return whole(l);
    return {1, 1, 0};
  }

  SourceSpan span_for(const Issue& issue) const {
    if (issue.element == "max_per_year" || issue.element == "thesis_after") {
      auto it = rule_lines_.find(issue.element);
      if (it != rule_lines_.end()) return line_span(it->second);
      return line_span(program_line_.value_or(1));
    }
    if (auto it = module_lines_.find(issue.element); it != module_lines_.end())
      return line_span(it->second);
    if (issue.code == "precedence-cycle") {
      std::set<std::string> members;
      std::stringstream ss(issue.element);
      for (std::string part; std::getline(ss, part, ',');) members.insert(part);
      for (const auto& [key, info] : edges_)
        if (members.count(key.first) && members.count(key.second)) return line_span(info.line);
    }
    if (issue.code == "choice-count" && !group_lines_.empty()) {
      for (std::size_t i = 0; i < curriculum_.choice_groups.size(); ++i) {
        const auto& g = curriculum_.choice_groups[i];
        if ("{" + detail::join(g.members, ",") + "}" == issue.element)
          return line_span(group_line_for(g));
      }
    }
    return line_span(program_line_.value_or(1));
  }

  // Choice groups are sorted after parsing; recover the source line by content.
  int group_line_for(const ChoiceGroup& g) const {
    for (const auto& l : lines_) {
      if (l.tokens[0].text != "choose") continue;
      std::vector<std::string> members;
      for (std::size_t i = 4; i + 1 < l.tokens.size(); i += 2) members.push_back(l.tokens[i].text);
      std::sort(members.begin(), members.end());
      if (members == g.members) return l.number;
    }
    return program_line_.value_or(1);
  }

  struct EdgeInfo {
    Precedence kind;
    int line;
    bool from_level = false;  // no explicit declaration of this pair yet
  };

  std::vector<Line> lines_;
  std::vector<ParseError>* errors_ = nullptr;
  std::vector<ParseError>* warnings_ = nullptr;
  Curriculum curriculum_;
  std::optional<int> program_line_;
  std::map<std::string, int> module_lines_;
  std::map<std::string, int> rule_lines_;
  std::map<std::string, int> rule_values_;
  std::map<std::pair<std::string, std::string>, EdgeInfo> edges_;
  std::vector<int> group_lines_;
};

}  // namespace dsl_detail

inline ParseResult parse_curriculum(std::string_view text) {
  return dsl_detail::Parser{}.run(text);
}

// Canonical text: program, modules by code, constraints (hard before soft,
// then by endpoints), choice groups, rules. max_per_year is omitted when it
// equals the module count, which is also the parser's default.
inline std::string serialize_curriculum(const Curriculum& c) {
  std::ostringstream out;
  out << "program " << dsl_detail::quote(c.name) << '\n';

  auto modules = c.modules;
  std::sort(modules.begin(), modules.end(),
            [](const ModuleDef& a, const ModuleDef& b) { return a.code < b.code; });
  for (const auto& m : modules) {
    out << "module " << m.code << " level " << m.level << ' '
        << (m.compulsory ? "compulsory" : "optional") << " year " << m.nominal_year;
    if (m.first_marker) out << " first";
    if (m.last_marker) out << " last";
    out << '\n';
  }

  auto constraints = c.constraints;
  std::sort(constraints.begin(), constraints.end());
  constraints.erase(std::unique(constraints.begin(), constraints.end()), constraints.end());
  for (const auto& k : constraints)
    out << "constraint " << to_string(k.kind) << ' ' << k.precedent << " -> " << k.antecedent
        << '\n';

  auto groups = c.choice_groups;
  for (auto& g : groups) std::sort(g.members.begin(), g.members.end());
  std::sort(groups.begin(), groups.end());
  for (const auto& g : groups)
    out << "choose " << g.required_count << " of {" << detail::join(g.members, ", ") << "}\n";

  if (c.rules.max_modules_per_year != static_cast<int>(c.modules.size()))
    out << "rule max_per_year " << c.rules.max_modules_per_year << '\n';
  out << "rule thesis_after " << c.rules.modules_required_for_thesis << '\n';
  return out.str();
}

}  // namespace edusim
