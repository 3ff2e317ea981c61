#pragma once

// Test helpers: fixture access, a random valid-curriculum generator and an
// exhaustive path oracle that works on plain string sets and shares no code
// with the library's admissibility logic.

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edusim/curriculum.hpp"
#include "edusim/dsl.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) {
  return std::string(EDUSIM_DATA_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string hou_source() { return read_file(data_path("hou.curriculum")); }

inline edusim::Curriculum hou() {
  auto r = edusim::parse_curriculum(hou_source());
  return *r.curriculum;
}

// A first, B compulsory, hard A -> B, one module a year.
inline const char* tiny_source() {
  return "program \"TINY\"\n"
         "module A level l compulsory year 1 first\n"
         "module B level l compulsory year 2\n"
         "constraint hard A -> B\n"
         "rule max_per_year 1\n"
         "rule thesis_after 2\n";
}

// ---------------------------------------------------------------------------
// Path oracle

using Set = std::set<std::string>;
using Path = std::vector<Set>;

inline Set unite(const Set& a, const Set& b) {
  Set out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline bool includes(const Set& big, const Set& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// Every subset of `items`, including the empty one.
inline std::vector<Set> power_set(const std::vector<std::string>& items) {
  std::vector<Set> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << items.size()); ++mask) {
    Set s;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (mask >> i & 1) s.insert(items[i]);
    out.push_back(s);
  }
  return out;
}

// Completion sets by brute force: subsets of the right size holding every
// compulsory module and exactly k members of each group.
inline std::vector<Set> oracle_completion_sets(const edusim::Curriculum& c) {
  std::vector<std::string> codes;
  for (const auto& m : c.modules) codes.push_back(m.code);
  std::vector<Set> out;
  for (const auto& s : power_set(codes)) {
    if (static_cast<int>(s.size()) != c.rules.modules_required_for_thesis) continue;
    bool ok = true;
    for (const auto& m : c.modules)
      if (m.compulsory && !s.count(m.code)) ok = false;
    for (const auto& g : c.choice_groups) {
      int n = 0;
      for (const auto& x : g.members) n += static_cast<int>(s.count(x));
      if (n != g.required_count) ok = false;
    }
    if (ok) out.push_back(s);
  }
  return out;
}

// One step of a path: selection D in `year` after `done`, aiming at
// completion set `target`.
inline bool oracle_step_ok(const edusim::Curriculum& c, const Set& done, const Set& d, int year,
                           const Set& target) {
  if (d.empty() || static_cast<int>(d.size()) > c.rules.max_modules_per_year) return false;
  const Set after = unite(done, d);
  if (!includes(target, after)) return false;
  for (const auto& x : d)
    if (done.count(x)) return false;
  for (const auto& m : c.modules) {
    if (m.first_marker && target.count(m.code)) {
      if (year == 1 && !d.count(m.code)) return false;
      if (year > 1 && d.count(m.code)) return false;
    }
    if (m.last_marker && d.count(m.code) && after != target) return false;
  }
  for (const auto& k : c.constraints) {
    if (!d.count(k.antecedent)) continue;
    if (k.kind == edusim::Precedence::hard) {
      if (!done.count(k.precedent)) return false;
    } else {
      const auto* p = c.find(k.precedent);
      const bool waived = !p->compulsory && !target.count(k.precedent);
      if (!after.count(k.precedent) && !waived) return false;
    }
  }
  return true;
}

// All paths: for each completion set, every ordered partition into yearly
// selections that passes the step rule at each year. A path reaching the
// same union through different targets is counted once.
inline std::set<Path> oracle_paths(const edusim::Curriculum& c) {
  std::set<Path> out;
  for (const auto& target : oracle_completion_sets(c)) {
    const std::vector<std::string> members(target.begin(), target.end());
    const auto subsets = power_set(members);
    std::vector<std::pair<Path, Set>> frontier{{{}, {}}};
    while (!frontier.empty()) {
      std::vector<std::pair<Path, Set>> next;
      for (const auto& [path, done] : frontier) {
        if (done == target) {
          out.insert(path);
          continue;
        }
        for (const auto& d : subsets) {
          if (!oracle_step_ok(c, done, d, static_cast<int>(path.size()) + 1, target)) continue;
          Path longer = path;
          longer.push_back(d);
          next.emplace_back(std::move(longer), unite(done, d));
        }
      }
      frontier = std::move(next);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random curricula

// Source text for a random curriculum. May be invalid (cycles through level
// rules, unreachable arithmetic); random_valid_source retries until it parses.
inline std::string random_source(std::mt19937& rng, int max_modules = 7) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int n = pick(2, max_modules);
  std::vector<std::string> codes;
  std::set<std::string> used;
  while (static_cast<int>(codes.size()) < n) {
    std::string code = pick(0, 3) == 0 ? std::string("M") + std::to_string(pick(1, 99))
                                       : std::to_string(pick(10, 99));
    if (used.insert(code).second) codes.push_back(code);
  }
  static const char* levels[] = {"junior", "senior", "core"};
  std::vector<bool> compulsory(n);
  std::vector<std::string> level(n);
  std::ostringstream out;
  out << "program \"R" << pick(0, 9999) << "\"\n";
  bool any_first = false;
  for (int i = 0; i < n; ++i) {
    compulsory[i] = pick(0, 1) == 0 || i == 0;
    level[i] = levels[pick(0, 2)];
    out << "module " << codes[i] << " level " << level[i]
        << (compulsory[i] ? " compulsory" : " optional") << " year " << pick(1, 3);
    if (compulsory[i] && !any_first && pick(0, 3) == 0) {
      out << " first";
      any_first = true;
    } else if (compulsory[i] && pick(0, 6) == 0) {
      out << " last";
    }
    out << '\n';
  }
  // Edges only go forward in declaration order, so explicit edges are acyclic.
  for (int e = pick(0, n); e > 0; --e) {
    const int a = pick(0, n - 2);
    const int b = pick(a + 1, n - 1);
    out << "constraint " << (pick(0, 1) ? "hard " : "soft ") << codes[a] << " -> " << codes[b] << '\n';
  }
  if (pick(0, 3) == 0)
    out << "constraint soft level:" << levels[pick(0, 2)] << " -> level:" << levels[pick(0, 2)] << '\n';
  std::vector<std::string> optional;
  for (int i = 0; i < n; ++i)
    if (!compulsory[i]) optional.push_back(codes[i]);
  std::shuffle(optional.begin(), optional.end(), rng);
  int thesis = static_cast<int>(std::count(compulsory.begin(), compulsory.end(), true));
  std::size_t at = 0;
  while (at < optional.size()) {
    const int size = pick(1, static_cast<int>(optional.size() - at));
    const int k = pick(1, size);
    out << "choose " << k << " of {";
    for (int j = 0; j < size; ++j) out << (j ? ", " : "") << optional[at + j];
    out << "}\n";
    at += size;
    thesis += k;
  }
  if (pick(0, 1)) out << "rule max_per_year " << pick(1, n) << '\n';
  if (pick(0, 1)) out << "rule thesis_after " << thesis << '\n';
  return out.str();
}

inline std::string random_valid_source(std::mt19937& rng, int max_modules = 7) {
  for (;;) {
    auto text = random_source(rng, max_modules);
    if (edusim::parse_curriculum(text).ok()) return text;
  }
}

}  // namespace testing_support
