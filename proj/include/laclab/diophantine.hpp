#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "laclab/bigint.hpp"
#include "laclab/seqgen.hpp"

namespace laclab {

/// L(N, d, nu) = #{1 <= a,b <= d, 1 <= k,l <= N : a n_k - b n_l = nu}, ordered
/// quadruples; for nu = 0 the solutions with k = l and a = b are excluded.
std::uint64_t count_solutions(const IntegerSequence& seq, std::size_t n, unsigned d, const BigInt& nu);

/// Quadruple-loop reference count.
std::uint64_t count_solutions_bruteforce(const IntegerSequence& seq, std::size_t n, unsigned d, const BigInt& nu);

/// Which offsets the sup over nu ranges over.
struct NuSelection {
  enum class Mode { every_offset, listed };
  Mode mode = Mode::every_offset;
  std::vector<BigInt> values;  // Mode::listed
  bool include_zero = false;   // Mode::every_offset

  static NuSelection every(bool include_zero = false);
  static NuSelection listed(std::vector<BigInt> values);
  /// +-[lo..hi].
  static NuSelection symmetric(long lo, long hi);
  std::string describe() const;
};

struct SupCount {
  BigInt nu;  // smallest maximising offset
  std::uint64_t count = 0;
};

/// sup over the selected offsets of L(N, d, nu). For every_offset the sup is
/// exact over all integers: differences are grouped by a two-prime
/// fingerprint and the leading groups are re-checked in exact arithmetic.
SupCount sup_count(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus);

struct ProfileRow {
  std::size_t window = 0;  // N'
  BigInt nu_star;
  std::uint64_t count = 0;
  double ratio = 0.0;      // L / N'
  double lil_value = 0.0;  // L (log N')^{1+eps} / N'
};

struct DiophantineProfile {
  std::vector<ProfileRow> rows;
  unsigned d = 1;
  std::string nu_description;
  bool lil = false;
  double epsilon = 0.0;
  std::string verdict;  // vanishing / non-vanishing / bounded / unbounded-trend / inconclusive

  void write_csv(std::ostream& out) const;
};

/// 1, 2, 4, ... below n, then n.
std::vector<std::size_t> dyadic_ladder(std::size_t n);

DiophantineProfile clt_condition_profile(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus);
DiophantineProfile lil_condition_profile(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus,
                                         double epsilon);

}  // namespace laclab
