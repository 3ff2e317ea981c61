#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <vector>

namespace edusim {

// Set of modules identified by their index in a curriculum's (sorted)
// module list. Curricula are limited to 64 modules.
class ModuleSet {
 public:
  static constexpr std::size_t kCapacity = 64;

  constexpr ModuleSet() = default;
  constexpr explicit ModuleSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr ModuleSet single(std::size_t index) {
    return ModuleSet(std::uint64_t{1} << index);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    return static_cast<std::size_t>(std::popcount(bits_));
  }
  constexpr bool contains(std::size_t index) const {
    return (bits_ >> index) & 1u;
  }
  constexpr bool subset_of(ModuleSet other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  constexpr bool disjoint(ModuleSet other) const {
    return (bits_ & other.bits_) == 0;
  }

  constexpr void insert(std::size_t index) { bits_ |= std::uint64_t{1} << index; }

  constexpr ModuleSet operator|(ModuleSet o) const { return ModuleSet(bits_ | o.bits_); }
  constexpr ModuleSet operator&(ModuleSet o) const { return ModuleSet(bits_ & o.bits_); }
  constexpr ModuleSet operator-(ModuleSet o) const { return ModuleSet(bits_ & ~o.bits_); }

  constexpr bool operator==(const ModuleSet&) const = default;

  // Indices in ascending order.
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (std::uint64_t b = bits_; b != 0; b &= b - 1)
      out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
    return out;
  }

  // Lexicographic order of the ascending index sequences; a proper prefix
  // sorts first, so the empty set is the minimum.
  friend constexpr std::strong_ordering lex_compare(ModuleSet a, ModuleSet b) {
    std::uint64_t x = a.bits_, y = b.bits_;
    while (x != 0 && y != 0) {
      const int i = std::countr_zero(x);
      const int j = std::countr_zero(y);
      if (i != j) return i <=> j;
      x &= x - 1;
      y &= y - 1;
    }
    if (x == 0 && y == 0) return std::strong_ordering::equal;
    return x == 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  }

 private:
  std::uint64_t bits_ = 0;
};

struct ModuleSetLexLess {
  constexpr bool operator()(ModuleSet a, ModuleSet b) const {
    return lex_compare(a, b) < 0;
  }
};

// Every subset of `universe` (including empty), in no particular order.
template <typename Fn>
void for_each_subset(ModuleSet universe, Fn&& fn) {
  const std::uint64_t u = universe.bits();
  std::uint64_t s = 0;
  do {
    fn(ModuleSet(s));
    s = (s - u) & u;
  } while (s != 0);
}

}  // namespace edusim

template <>
struct std::hash<edusim::ModuleSet> {
  std::size_t operator()(edusim::ModuleSet s) const noexcept {
    return std::hash<std::uint64_t>{}(s.bits());
  }
};
