#include "laclab/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

#include "laclab/error.hpp"

namespace laclab {

namespace {

constexpr std::uint64_t kPrimeA = 2305843009213693951ULL;  // 2^61 - 1
constexpr std::uint64_t kPrimeB = 2305843009213693921ULL;  // next prime below 2^61 - 1
constexpr std::size_t kMaxDifferences = std::size_t{1} << 23;

void check_query(const IntegerSequence& seq, std::size_t n, unsigned d) {
  if (n < 1 || n > seq.size()) throw DomainError("window N must lie in [1, length]");
  if (d < 1) throw DomainError("coefficient bound d must be >= 1");
}

std::vector<BigInt> sorted_multiples(const IntegerSequence& seq, std::size_t n, unsigned d, const BigInt& shift) {
  std::vector<BigInt> out;
  out.reserve(static_cast<std::size_t>(d) * n);
  for (std::size_t k = 1; k <= n; ++k) {
    for (unsigned a = 1; a <= d; ++a) out.push_back(seq.term(k) * a + shift);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t mod_prime(const BigInt& v, std::uint64_t p) {
  return static_cast<std::uint64_t>(mpz_fdiv_ui(v.get_mpz_t(), p));
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % p);
}

struct Fingerprint {
  std::uint64_t x, y;
  std::uint32_t k, l;
  std::uint16_t a, b;
  bool operator<(const Fingerprint& o) const noexcept { return std::tie(x, y) < std::tie(o.x, o.y); }
};

SupCount sup_every(const IntegerSequence& seq, std::size_t n, unsigned d, bool include_zero) {
  const std::size_t total = static_cast<std::size_t>(d) * d * n * n;
  if (total > kMaxDifferences) {
    throw GuardError("exhaustive offset sup limited to d^2 N^2 <= 2^23; pass an explicit nu range");
  }
  std::vector<std::uint64_t> ra(n), rb(n);
  for (std::size_t k = 0; k < n; ++k) {
    ra[k] = mod_prime(seq.term(k + 1), kPrimeA);
    rb[k] = mod_prime(seq.term(k + 1), kPrimeB);
  }
  std::vector<Fingerprint> fp;
  fp.reserve(total);
  for (std::uint32_t k = 0; k < n; ++k) {
    for (std::uint32_t l = 0; l < n; ++l) {
      for (std::uint16_t a = 1; a <= d; ++a) {
        for (std::uint16_t b = 1; b <= d; ++b) {
          if (k == l && a == b) continue;
          const std::uint64_t x = (mulmod(a, ra[k], kPrimeA) + kPrimeA - mulmod(b, ra[l], kPrimeA)) % kPrimeA;
          const std::uint64_t y = (mulmod(a, rb[k], kPrimeB) + kPrimeB - mulmod(b, rb[l], kPrimeB)) % kPrimeB;
          fp.push_back({x, y, k, l, a, b});
        }
      }
    }
  }
  std::sort(fp.begin(), fp.end());
  struct Group {
    std::size_t begin, end;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < fp.size();) {
    std::size_t j = i;
    while (j < fp.size() && fp[j].x == fp[i].x && fp[j].y == fp[i].y) ++j;
    groups.push_back({i, j});
    i = j;
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& g, const Group& h) { return g.end - g.begin > h.end - h.begin; });
  SupCount best;
  bool have = false;
  for (const auto& g : groups) {
    const std::uint64_t size = g.end - g.begin;
    if (have && size < best.count) break;
    std::map<BigInt, std::uint64_t> exact;
    for (std::size_t i = g.begin; i < g.end; ++i) {
      const auto& e = fp[i];
      exact[seq.term(e.k + 1) * e.a - seq.term(e.l + 1) * e.b] += 1;
    }
    for (const auto& [nu, c] : exact) {
      if (sgn(nu) == 0 && !include_zero) continue;
      if (!have || c > best.count || (c == best.count && nu < best.nu)) {
        best.nu = nu;
        best.count = c;
        have = true;
      }
    }
  }
  return best;
}

}  // namespace

std::uint64_t count_solutions(const IntegerSequence& seq, std::size_t n, unsigned d, const BigInt& nu) {
  check_query(seq, n, d);
  const auto lhs = sorted_multiples(seq, n, d, BigInt(0));  // a n_k
  const auto rhs = sorted_multiples(seq, n, d, nu);         // b n_l + nu
  std::uint64_t count = 0;
  std::size_t i = 0, j = 0;
  while (i < lhs.size() && j < rhs.size()) {
    const int c = cmp(lhs[i], rhs[j]);
    if (c < 0) {
      ++i;
    } else if (c > 0) {
      ++j;
    } else {
      std::size_t i2 = i, j2 = j;
      while (i2 < lhs.size() && lhs[i2] == lhs[i]) ++i2;
      while (j2 < rhs.size() && rhs[j2] == rhs[j]) ++j2;
      count += static_cast<std::uint64_t>(i2 - i) * (j2 - j);
      i = i2;
      j = j2;
    }
  }
  if (sgn(nu) == 0) count -= static_cast<std::uint64_t>(d) * n;
  return count;
}

std::uint64_t count_solutions_bruteforce(const IntegerSequence& seq, std::size_t n, unsigned d, const BigInt& nu) {
  check_query(seq, n, d);
  std::uint64_t count = 0;
  for (unsigned a = 1; a <= d; ++a) {
    for (unsigned b = 1; b <= d; ++b) {
      for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t l = 1; l <= n; ++l) {
          if (sgn(nu) == 0 && a == b && k == l) continue;
          if (seq.term(k) * a - seq.term(l) * b == nu) ++count;
        }
      }
    }
  }
  return count;
}

NuSelection NuSelection::every(bool include_zero) {
  NuSelection s;
  s.mode = Mode::every_offset;
  s.include_zero = include_zero;
  return s;
}

NuSelection NuSelection::listed(std::vector<BigInt> values) {
  if (values.empty()) throw DomainError("nu range must be nonempty");
  NuSelection s;
  s.mode = Mode::listed;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  s.values = std::move(values);
  return s;
}

NuSelection NuSelection::symmetric(long lo, long hi) {
  if (lo < 0 || hi < lo) throw DomainError("symmetric nu range needs 0 <= lo <= hi");
  std::vector<BigInt> v;
  for (long m = lo; m <= hi; ++m) {
    v.emplace_back(m);
    if (m != 0) v.emplace_back(-m);
  }
  return listed(std::move(v));
}

std::string NuSelection::describe() const {
  if (mode == Mode::every_offset) return include_zero ? "all integers" : "all nonzero integers";
  if (values.size() <= 8) {
    std::string s = "{";
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + to_decimal(values[i]);
    return s + "}";
  }
  return std::to_string(values.size()) + " listed offsets in [" + to_decimal(values.front()) + ", " +
         to_decimal(values.back()) + "]";
}

SupCount sup_count(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus) {
  check_query(seq, n, d);
  if (d > 65535 || n > 0xffffffffULL) throw GuardError("query too large");
  if (nus.mode == NuSelection::Mode::every_offset) return sup_every(seq, n, d, nus.include_zero);
  SupCount best;
  bool have = false;
  for (const auto& nu : nus.values) {
    const auto c = count_solutions(seq, n, d, nu);
    if (!have || c > best.count) {
      best.nu = nu;
      best.count = c;
      have = true;
    }
  }
  return best;
}

std::vector<std::size_t> dyadic_ladder(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t m = 1; m < n; m *= 2) out.push_back(m);
  out.push_back(n);
  return out;
}

void DiophantineProfile::write_csv(std::ostream& out) const {
  out << (lil ? "N,nu_star,L,ratio,lil_value\n" : "N,nu_star,L,ratio\n");
  char buf[128];
  for (const auto& r : rows) {
    out << r.window << ',' << to_decimal(r.nu_star) << ',' << r.count << ',';
    if (lil) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.ratio, r.lil_value);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g\n", r.ratio);
    }
    out << buf;
  }
}

namespace {

DiophantineProfile build_profile(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus,
                                 bool lil, double epsilon) {
  check_query(seq, n, d);
  DiophantineProfile p;
  p.d = d;
  p.nu_description = nus.describe();
  p.lil = lil;
  p.epsilon = epsilon;
  for (std::size_t w : dyadic_ladder(n)) {
    if (lil && w < 2 && n >= 2) continue;  // log 1 = 0 carries no information
    const auto s = sup_count(seq, w, d, nus);
    ProfileRow r;
    r.window = w;
    r.nu_star = s.nu;
    r.count = s.count;
    r.ratio = static_cast<double>(s.count) / static_cast<double>(w);
    r.lil_value = r.ratio * std::pow(std::log(static_cast<double>(w)), 1.0 + epsilon);
    p.rows.push_back(std::move(r));
  }
  return p;
}

}  // namespace

DiophantineProfile clt_condition_profile(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus) {
  auto p = build_profile(seq, n, d, nus, false, 0.0);
  const auto& rows = p.rows;
  if (rows.size() < 2) {
    p.verdict = "inconclusive";
    return p;
  }
  double peak = 0.0;
  for (const auto& r : rows) peak = std::max(peak, r.ratio);
  const double last = rows.back().ratio;
  if (last == 0.0 || last <= peak / 4.0) {
    p.verdict = "vanishing";
  } else if (last >= peak / 2.0 && rows.size() >= 3) {
    p.verdict = "non-vanishing";
  } else {
    p.verdict = "inconclusive";
  }
  return p;
}

DiophantineProfile lil_condition_profile(const IntegerSequence& seq, std::size_t n, unsigned d, const NuSelection& nus,
                                         double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("LIL profile needs epsilon > 0");
  auto p = build_profile(seq, n, d, nus, true, epsilon);
  const auto& rows = p.rows;
  if (rows.size() < 2) {
    p.verdict = "inconclusive";
    return p;
  }
  bool all_zero = true;
  for (const auto& r : rows) all_zero = all_zero && r.count == 0;
  if (all_zero) {
    p.verdict = "bounded";
    return p;
  }
  const std::size_t half = rows.size() / 2;
  double early = 0.0;
  for (std::size_t i = 0; i < std::max<std::size_t>(half, 1); ++i) early = std::max(early, rows[i].lil_value);
  const double last = rows.back().lil_value;
  bool rising = rows.size() >= 3;
  for (std::size_t i = rows.size() >= 3 ? rows.size() - 3 : 0; i + 1 < rows.size(); ++i) {
    rising = rising && rows[i + 1].lil_value >= rows[i].lil_value;
  }
  if (rising && last > 1.5 * early) {
    p.verdict = "unbounded-trend";
  } else if (last <= early) {
    p.verdict = "bounded";
  } else {
    p.verdict = "inconclusive";
  }
  return p;
}

}  // namespace laclab
