#pragma once

#include <array>
#include <cstdint>

namespace edusim {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11), bit-compatible
// with the Random123 reference implementation. Each (key, counter) pair maps
// to four independent 32-bit words, so any stream position can be computed
// directly without sequential state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      ctr = round(ctr, key);
    }
    return ctr;
  }

  static constexpr Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

  // Uniform double in [0, 1) built from the top 53 bits of words 0 and 1.
  static constexpr double to_unit(const Counter& out) {
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32) | out[1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Draw for one simulated student-year. The counter is
// (replica, cohort year, step, 0) under the master-seed key, so results do
// not depend on how students are partitioned across threads.
inline double student_uniform(std::uint64_t seed, std::uint32_t replica, std::int32_t cohort_year,
                              std::uint32_t step) {
  return Philox4x32::to_unit(Philox4x32::block(
      {replica, static_cast<std::uint32_t>(cohort_year), step, 0u}, Philox4x32::key_from_seed(seed)));
}

}  // namespace edusim
