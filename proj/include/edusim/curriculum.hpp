#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <unordered_set>
#include <vector>

#include "edusim/diagnostics.hpp"
#include "edusim/module_set.hpp"

namespace edusim {

struct ModuleDef {
  std::string code;
  std::string level;
  bool compulsory = true;
  bool first_marker = false;  // must be part of the first-year selection
  bool last_marker = false;   // may only be taken in the completing year
  int nominal_year = 1;

  bool operator==(const ModuleDef&) const = default;
};

enum class Precedence { hard, soft };

inline std::string_view to_string(Precedence p) {
  return p == Precedence::hard ? "hard" : "soft";
}

// hard: precedent cleared in an earlier year.
// soft: precedent started no later than the antecedent.
struct PrecedenceConstraint {
  Precedence kind = Precedence::hard;
  std::string precedent;
  std::string antecedent;

  bool operator==(const PrecedenceConstraint&) const = default;
  auto operator<=>(const PrecedenceConstraint&) const = default;
};

// Select exactly `required_count` of `members`.
struct ChoiceGroup {
  std::vector<std::string> members;
  int required_count = 0;

  bool operator==(const ChoiceGroup&) const = default;
  auto operator<=>(const ChoiceGroup&) const = default;
};

struct ProgramRules {
  int max_modules_per_year = 2;
  int modules_required_for_thesis = 4;

  bool operator==(const ProgramRules&) const = default;
};

struct Curriculum {
  std::string name;
  std::vector<ModuleDef> modules;
  std::vector<PrecedenceConstraint> constraints;
  std::vector<ChoiceGroup> choice_groups;
  ProgramRules rules;

  bool operator==(const Curriculum&) const = default;

  const ModuleDef* find(std::string_view code) const {
    for (const auto& m : modules)
      if (m.code == code) return &m;
    return nullptr;
  }
};

using CodeSet = std::vector<std::string>;  // sorted, unique

namespace detail {

inline bool valid_code(std::string_view code) {
  if (code.empty()) return false;
  return std::all_of(code.begin(), code.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
           (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
  });
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Strongly connected components with more than one node (Tarjan).
inline std::vector<std::vector<std::size_t>> nontrivial_sccs(
    const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  int counter = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> comp;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      if (comp.size() > 1) out.push_back(std::move(comp));
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return out;
}

}  // namespace detail

// Checks every structural invariant of a curriculum and returns it unchanged,
// or every violation found.
inline Checked<Curriculum> validate_curriculum(const Curriculum& raw) {
  std::vector<Issue> issues;
  auto report = [&](std::string code, std::string message, std::string element) {
    issues.push_back({std::move(code), std::move(message), std::move(element), 0});
  };

  if (raw.modules.empty()) report("no-modules", "no modules", "");
  if (raw.modules.size() > ModuleSet::kCapacity)
    report("too-many-modules", "a curriculum may declare at most 64 modules", "");

  std::map<std::string, std::size_t> position;
  for (const auto& m : raw.modules) {
    if (!detail::valid_code(m.code))
      report("invalid-code", "module code '" + m.code + "' must match [A-Za-z0-9_.-]+", m.code);
    if (!position.emplace(m.code, position.size()).second)
      report("duplicate-module", "duplicate module code " + m.code, m.code);
    if (m.first_marker && m.last_marker)
      report("first-last-conflict", "module " + m.code + " cannot be both first and last", m.code);
    if (!detail::valid_code(m.level))
      report("invalid-level", "module " + m.code + " has an invalid level tag", m.code);
    if (m.nominal_year < 1)
      report("invalid-year", "module " + m.code + " has nominal year < 1", m.code);
  }

  std::vector<std::vector<std::size_t>> adj(position.size());
  for (const auto& c : raw.constraints) {
    bool known = true;
    for (const auto* code : {&c.precedent, &c.antecedent}) {
      if (!position.count(*code)) {
        report("unknown-module", "constraint references unknown module " + *code, *code);
        known = false;
      }
    }
    if (!known) continue;
    if (c.precedent == c.antecedent) {
      report("self-precedence", "module " + c.precedent + " cannot precede itself", c.precedent);
      continue;
    }
    adj[position[c.precedent]].push_back(position[c.antecedent]);
  }
  std::vector<std::string> code_of(position.size());
  for (const auto& [code, idx] : position) code_of[idx] = code;
  for (const auto& comp : detail::nontrivial_sccs(adj)) {
    std::vector<std::string> names;
    for (std::size_t i : comp) names.push_back(code_of[i]);
    std::sort(names.begin(), names.end());
    const std::string joined = detail::join(names, ",");
    report("precedence-cycle", "precedence cycle: " + joined, joined);
  }

  int chosen = 0;
  for (const auto& g : raw.choice_groups) {
    std::set<std::string> seen;
    const std::string label = "{" + detail::join(g.members, ",") + "}";
    for (const auto& member : g.members) {
      if (!seen.insert(member).second)
        report("duplicate-member", "choice group lists " + member + " twice", member);
      const ModuleDef* def = raw.find(member);
      if (!def)
        report("unknown-module", "choice group references unknown module " + member, member);
      else if (def->compulsory)
        report("choice-member-compulsory", "choice group member " + member + " is compulsory", member);
    }
    if (g.required_count < 0 || static_cast<std::size_t>(g.required_count) > seen.size())
      report("choice-count", "cannot choose " + std::to_string(g.required_count) + " of " + label, label);
    chosen += g.required_count;
  }

  if (raw.rules.max_modules_per_year < 1)
    report("invalid-rule", "max_per_year must be at least 1", "max_per_year");
  if (raw.rules.modules_required_for_thesis < 1)
    report("invalid-rule", "thesis_after must be at least 1", "thesis_after");

  const int compulsory = static_cast<int>(std::count_if(
      raw.modules.begin(), raw.modules.end(), [](const ModuleDef& m) { return m.compulsory; }));
  if (!raw.modules.empty() && compulsory + chosen != raw.rules.modules_required_for_thesis)
    report("completion-arithmetic",
           std::to_string(compulsory) + " compulsory + " + std::to_string(chosen) +
               " chosen modules != thesis_after " +
               std::to_string(raw.rules.modules_required_for_thesis),
           "thesis_after");

  if (!issues.empty()) return issues;
  return raw;
}

// Non-fatal remarks about configurations whose semantics are unusual.
inline std::vector<Issue> curriculum_warnings(const Curriculum& c) {
  std::vector<Issue> out;
  std::map<std::string, int> membership;
  for (const auto& g : c.choice_groups)
    for (const auto& m : g.members) ++membership[m];
  for (const auto& [code, count] : membership)
    if (count > 1)
      out.push_back({"overlapping-choice-groups",
                     "module " + code + " belongs to several choice groups", code, 0});
  for (const auto& m : c.modules)
    if (!m.compulsory && !membership.count(m.code))
      out.push_back({"unreachable-optional",
                     "optional module " + m.code + " is in no choice group and can never be taken",
                     m.code, 0});
  return out;
}

// Index-based view of a validated curriculum. Module indices follow the
// byte order of the module codes, so lexicographic order over ModuleSet
// equals lexicographic order over sorted code lists.
class Program {
 public:
  // Precondition: `c` passed validate_curriculum.
  explicit Program(Curriculum c) : curriculum_(std::move(c)) {
    const auto& mods = curriculum_.modules;
    std::vector<std::size_t> order(mods.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return mods[a].code < mods[b].code; });
    for (std::size_t i = 0; i < order.size(); ++i) {
      defs_.push_back(mods[order[i]]);
      index_.emplace(defs_.back().code, i);
    }
    hard_pre_.assign(defs_.size(), {});
    soft_pre_.assign(defs_.size(), {});
    for (std::size_t i = 0; i < defs_.size(); ++i) {
      const auto& d = defs_[i];
      (d.compulsory ? compulsory_ : optional_).insert(i);
      if (d.first_marker) first_.insert(i);
      if (d.last_marker) last_.insert(i);
    }
    for (const auto& k : curriculum_.constraints) {
      const std::size_t p = index_.at(k.precedent), a = index_.at(k.antecedent);
      (k.kind == Precedence::hard ? hard_pre_ : soft_pre_)[a].insert(p);
    }
    build_completion_sets();
    build_live_sets();
  }

  const Curriculum& curriculum() const { return curriculum_; }
  std::size_t module_count() const { return defs_.size(); }
  const ModuleDef& module(std::size_t i) const { return defs_[i]; }
  const std::string& code(std::size_t i) const { return defs_[i].code; }
  const ProgramRules& rules() const { return curriculum_.rules; }
  ModuleSet all_modules() const {
    return ModuleSet(defs_.size() == 64 ? ~std::uint64_t{0}
                                        : (std::uint64_t{1} << defs_.size()) - 1);
  }

  std::optional<std::size_t> index_of(std::string_view code) const {
    auto it = index_.find(std::string(code));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<ModuleSet> to_set(const std::vector<std::string>& codes) const {
    ModuleSet s;
    for (const auto& c : codes) {
      auto i = index_of(c);
      if (!i) return std::nullopt;
      s.insert(*i);
    }
    return s;
  }

  CodeSet codes(ModuleSet s) const {
    CodeSet out;
    for (std::size_t i : s.indices()) out.push_back(defs_[i].code);
    return out;
  }

  // "{50,51}" style rendering.
  std::string format(ModuleSet s) const {
    return "{" + detail::join(codes(s), ",") + "}";
  }

  // Sorted lexicographically.
  const std::vector<ModuleSet>& completion_sets() const { return completion_; }

  bool is_completion_set(ModuleSet s) const {
    return std::binary_search(completion_.begin(), completion_.end(), s, ModuleSetLexLess{});
  }

  bool inside_completion_set(ModuleSet s) const {
    return std::any_of(completion_.begin(), completion_.end(),
                       [&](ModuleSet c) { return s.subset_of(c); });
  }

  // Every admissible nonempty selection for the coming year, sorted
  // lexicographically. `year` is the 1-based position in the tuition path.
  std::vector<ModuleSet> admissible_selections(ModuleSet completed, int year) const {
    std::vector<ModuleSet> out;
    if (is_completion_set(completed)) return out;

    ModuleSet reachable;
    for (ModuleSet c : completion_)
      if (completed.subset_of(c)) reachable = reachable | c;
    const ModuleSet candidates = reachable - completed;
    const auto cap = static_cast<std::size_t>(curriculum_.rules.max_modules_per_year);

    for_each_subset(candidates, [&](ModuleSet d) {
      if (d.empty() || d.size() > cap) return;
      if (admissible(completed, d, year)) out.push_back(d);
    });
    std::sort(out.begin(), out.end(), ModuleSetLexLess{});
    return out;
  }

  // True when `selection` passes every rule for this year and a completion
  // set is still reachable afterwards.
  bool admissible(ModuleSet completed, ModuleSet selection, int year) const {
    return step_allowed(completed, selection, year) && live_.count((completed | selection).bits()) > 0;
  }

 private:
  // The per-year rules alone, without looking further ahead.
  bool step_allowed(ModuleSet completed, ModuleSet selection, int year) const {
    if (selection.empty() || !selection.disjoint(completed)) return false;
    if (selection.size() > static_cast<std::size_t>(curriculum_.rules.max_modules_per_year))
      return false;
    const ModuleSet taken = completed | selection;
    for (std::size_t d : selection.indices())
      if (!hard_pre_[d].subset_of(completed)) return false;
    if (year > 1 && !(selection & first_).empty()) return false;

    for (ModuleSet target : completion_) {
      if (!taken.subset_of(target)) continue;
      if (year == 1 && !(first_ & target).subset_of(selection)) continue;
      if (!(selection & last_).empty() && taken != target) continue;
      // An optional precedent left out of the final selection places no
      // restriction on its antecedent. A waiver used in an earlier year
      // binds the target too: a skipped precedent can never be taken later.
      bool soft_ok = true;
      for (std::size_t d : taken.indices()) {
        for (std::size_t p : soft_pre_[d].indices()) {
          const bool in_time = completed.contains(d) ? completed.contains(p) : taken.contains(p);
          if (in_time) continue;
          if (optional_.contains(p) && !target.contains(p)) continue;
          soft_ok = false;
        }
      }
      if (soft_ok) return true;
    }
    return false;
  }

  // Sets inside some completion set from which a completion set can still
  // be reached. Larger sets are settled first so each test only looks one
  // step ahead. Year rules only distinguish the first year, which no
  // nonempty taken set can still be in.
  void build_live_sets() {
    std::vector<ModuleSet> all;
    std::unordered_set<std::uint64_t> seen;
    for (ModuleSet c : completion_)
      for_each_subset(c, [&](ModuleSet s) {
        if (seen.insert(s.bits()).second) all.push_back(s);
      });
    std::sort(all.begin(), all.end(), [](ModuleSet a, ModuleSet b) { return a.size() > b.size(); });
    const auto cap = static_cast<std::size_t>(curriculum_.rules.max_modules_per_year);
    for (ModuleSet s : all) {
      if (is_completion_set(s)) {
        live_.insert(s.bits());
        continue;
      }
      ModuleSet reachable;
      for (ModuleSet c : completion_)
        if (s.subset_of(c)) reachable = reachable | c;
      const int year = s.empty() ? 1 : 2;
      bool live = false;
      for_each_subset(reachable - s, [&](ModuleSet d) {
        if (live || d.empty() || d.size() > cap) return;
        live = live_.count((s | d).bits()) && step_allowed(s, d, year);
      });
      if (live) live_.insert(s.bits());
    }
  }

  void build_completion_sets() {
    // Cross product of the k-subsets of every choice group on top of the
    // compulsory modules; overlapping groups can yield undersized unions,
    // which are dropped.
    std::vector<ModuleSet> acc{compulsory_};
    for (const auto& g : curriculum_.choice_groups) {
      ModuleSet members;
      for (const auto& m : g.members) members.insert(index_.at(m));
      std::vector<ModuleSet> picks;
      for_each_subset(members, [&](ModuleSet s) {
        if (s.size() == static_cast<std::size_t>(g.required_count)) picks.push_back(s);
      });
      std::vector<ModuleSet> next;
      for (ModuleSet a : acc)
        for (ModuleSet p : picks) next.push_back(a | p);
      acc = std::move(next);
    }
    const auto need = static_cast<std::size_t>(curriculum_.rules.modules_required_for_thesis);
    for (ModuleSet s : acc)
      if (s.size() == need) completion_.push_back(s);
    std::sort(completion_.begin(), completion_.end(), ModuleSetLexLess{});
    completion_.erase(std::unique(completion_.begin(), completion_.end()), completion_.end());
  }

  Curriculum curriculum_;
  std::vector<ModuleDef> defs_;
  std::map<std::string, std::size_t> index_;
  ModuleSet compulsory_, optional_, first_, last_;
  std::vector<ModuleSet> hard_pre_, soft_pre_;
  std::vector<ModuleSet> completion_;
  std::unordered_set<std::uint64_t> live_;
};

// Code-level conveniences mirroring the Program methods.

inline std::vector<CodeSet> completion_sets(const Curriculum& c) {
  Program p(c);
  std::vector<CodeSet> out;
  for (ModuleSet s : p.completion_sets()) out.push_back(p.codes(s));
  return out;
}

inline Checked<std::vector<CodeSet>> admissible_selections(const CodeSet& completed, int year,
                                                           const Curriculum& c) {
  Program p(c);
  std::vector<Issue> issues;
  for (const auto& code : completed)
    if (!p.index_of(code))
      issues.push_back({"unknown-module", "completed set contains unknown module " + code, code, 0});
  if (year < 1) issues.push_back({"invalid-year", "year index must be >= 1", "", 0});
  if (!issues.empty()) return issues;
  const ModuleSet done = *p.to_set(completed);
  if (!p.inside_completion_set(done))
    return std::vector<Issue>{{"stray-module",
                               "completed set " + p.format(done) + " is not inside any completion set",
                               p.format(done), 0}};
  std::vector<CodeSet> out;
  for (ModuleSet s : p.admissible_selections(done, year)) out.push_back(p.codes(s));
  return out;
}

}  // namespace edusim
