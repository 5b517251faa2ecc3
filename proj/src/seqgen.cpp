#include "laclab/seqgen.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "laclab/error.hpp"
#include "laclab/numeric.hpp"

namespace laclab {

namespace {

// RAII wrapper over an mpfr_t.
class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

bool is_small_integer(double g) { return g >= 0.0 && g <= 4096.0 && g == std::floor(g); }

// 1 + 1e-9 as an exact rational.
const Rational& min_step() {
  static const Rational r(BigInt(1000000001), BigInt(1000000000));
  return r;
}

// ceil(n * k^gamma) for a non-integer gamma.
BigInt ceil_times_power(const BigInt& n, std::uint64_t k, double gamma) {
  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(bit_length(n) + 64 * 2 + 64);
  Mpfr base(64), expo(64), power(prec), product(prec + 64);
  mpfr_set_ui(base.get(), k, MPFR_RNDN);
  mpfr_set_d(expo.get(), gamma, MPFR_RNDN);
  mpfr_pow(power.get(), base.get(), expo.get(), MPFR_RNDU);
  mpfr_mul_z(product.get(), power.get(), n.get_mpz_t(), MPFR_RNDU);
  mpfr_ceil(product.get(), product.get());
  BigInt out;
  mpfr_get_z(out.get_mpz_t(), product.get(), MPFR_RNDN);
  return out;
}

// Sign of (n_next - n * k^gamma); exact for every input.
int compare_to_power(const BigInt& n_next, const BigInt& n, std::uint64_t k, double gamma) {
  if (is_small_integer(gamma)) {
    BigInt p;
    mpz_ui_pow_ui(p.get_mpz_t(), k, static_cast<unsigned long>(gamma));
    return cmp(n_next, n * p);
  }
  for (mpfr_prec_t prec = 256; prec <= (1 << 16); prec *= 4) {
    Mpfr base(64), expo(64), lo(prec), hi(prec);
    mpfr_set_ui(base.get(), k, MPFR_RNDN);
    mpfr_set_d(expo.get(), gamma, MPFR_RNDN);
    const int exact = mpfr_pow(lo.get(), base.get(), expo.get(), MPFR_RNDD);
    mpfr_pow(hi.get(), base.get(), expo.get(), MPFR_RNDU);
    const mpfr_prec_t wide = prec + static_cast<mpfr_prec_t>(bit_length(n)) + 8;
    Mpfr lo_n(wide), hi_n(wide);
    mpfr_mul_z(lo_n.get(), lo.get(), n.get_mpz_t(), MPFR_RNDD);  // exact at this width
    mpfr_mul_z(hi_n.get(), hi.get(), n.get_mpz_t(), MPFR_RNDU);
    const int c_lo = mpfr_cmp_z(lo_n.get(), n_next.get_mpz_t());
    const int c_hi = mpfr_cmp_z(hi_n.get(), n_next.get_mpz_t());
    if (exact == 0) return -c_lo;  // k^gamma representable: lo == hi == exact value
    if (c_hi < 0) return 1;        // n_next > n * upper bound
    if (c_lo > 0) return -1;       // n_next < n * lower bound
  }
  throw DomainError("cannot decide n_{k+1} >= n_k k^gamma at 65536 bits");
}

}  // namespace

SequenceSpec SequenceSpec::geometric(std::int64_t theta, std::size_t length) {
  SequenceSpec s;
  s.kind = SequenceKind::geometric;
  s.theta = theta;
  s.length = length;
  return s;
}

SequenceSpec SequenceSpec::geometric_minus_one(std::int64_t theta, std::size_t length) {
  SequenceSpec s = geometric(theta, length);
  s.kind = SequenceKind::geometric_minus_one;
  return s;
}

SequenceSpec SequenceSpec::power_gap(double gamma, BigInt first, std::size_t length) {
  SequenceSpec s;
  s.kind = SequenceKind::power_gap;
  s.gamma = gamma;
  s.first = std::move(first);
  s.length = length;
  return s;
}

SequenceSpec SequenceSpec::superlacunary_square(std::int64_t base, std::size_t length) {
  SequenceSpec s = geometric(base, length);
  s.kind = SequenceKind::superlacunary_square;
  return s;
}

SequenceSpec SequenceSpec::explicit_list(std::vector<BigInt> terms) {
  SequenceSpec s;
  s.kind = SequenceKind::explicit_terms;
  s.length = terms.size();
  s.terms = std::move(terms);
  return s;
}

std::string SequenceSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind) << '(';
  switch (kind) {
    case SequenceKind::geometric:
    case SequenceKind::geometric_minus_one:
      os << "theta=" << theta;
      break;
    case SequenceKind::superlacunary_square:
      os << "base=" << theta;
      break;
    case SequenceKind::power_gap:
      os << "gamma=" << gamma << ",n1=" << to_decimal(first);
      break;
    case SequenceKind::explicit_terms:
      os << "terms";
      break;
  }
  os << ",N=" << length << ')';
  return os.str();
}

std::string to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::geometric: return "geometric";
    case SequenceKind::geometric_minus_one: return "geometric-minus-one";
    case SequenceKind::power_gap: return "power-gap";
    case SequenceKind::superlacunary_square: return "superlacunary-square";
    case SequenceKind::explicit_terms: return "explicit";
  }
  return "unknown";
}

SequenceKind parse_sequence_kind(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '_', '-');
  if (n == "geometric") return SequenceKind::geometric;
  if (n == "geometric-minus-one") return SequenceKind::geometric_minus_one;
  if (n == "power-gap") return SequenceKind::power_gap;
  if (n == "superlacunary-square") return SequenceKind::superlacunary_square;
  if (n == "explicit") return SequenceKind::explicit_terms;
  throw DomainError("unknown sequence kind '" + name + "'");
}

IntegerSequence::IntegerSequence(std::vector<BigInt> terms, SequenceSpec provenance)
    : terms_(std::move(terms)), provenance_(std::move(provenance)) {
  if (terms_.empty()) throw DomainError("sequence must have at least one term");
  if (sgn(terms_.front()) <= 0) throw DomainError("sequence terms must be positive");
  for (std::size_t i = 1; i < terms_.size(); ++i) {
    if (terms_[i] <= terms_[i - 1]) {
      throw DomainError("sequence not strictly increasing at index " + std::to_string(i + 1));
    }
  }
}

IntegerSequence IntegerSequence::prefix(std::size_t count) const {
  if (count == 0 || count > terms_.size()) throw DomainError("prefix length out of range");
  std::vector<BigInt> t(terms_.begin(), terms_.begin() + static_cast<std::ptrdiff_t>(count));
  if (count == terms_.size()) return *this;
  SequenceSpec spec = provenance_;
  spec.length = count;
  if (spec.kind == SequenceKind::explicit_terms) spec.terms = t;
  return IntegerSequence(std::move(t), spec);
}

IntegerSequence generate(const SequenceSpec& spec) {
  const std::size_t n = spec.kind == SequenceKind::explicit_terms ? spec.terms.size() : spec.length;
  if (n == 0) throw DomainError("sequence length N must be >= 1");
  std::vector<BigInt> terms;
  terms.reserve(n);
  switch (spec.kind) {
    case SequenceKind::geometric:
    case SequenceKind::geometric_minus_one: {
      if (spec.theta < 2) throw DomainError("theta must be >= 2");
      BigInt p = 1;
      for (std::size_t k = 1; k <= n; ++k) {
        p *= static_cast<unsigned long>(spec.theta);
        terms.push_back(spec.kind == SequenceKind::geometric ? p : BigInt(p - 1));
      }
      break;
    }
    case SequenceKind::superlacunary_square: {
      if (spec.theta < 2) throw DomainError("base must be >= 2");
      for (std::size_t k = 1; k <= n; ++k) {
        BigInt p;
        mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(spec.theta), static_cast<unsigned long>(k * k));
        terms.push_back(std::move(p));
      }
      break;
    }
    case SequenceKind::power_gap: {
      if (!(spec.gamma > 0.0)) throw DomainError("power_gap gamma must be > 0");
      if (sgn(spec.first) <= 0) throw DomainError("power_gap n1 must be >= 1");
      terms.push_back(spec.first);
      for (std::size_t k = 1; k < n; ++k) {
        const BigInt& cur = terms.back();
        // Candidate from the 1 + 1e-9 floor, exact.
        BigInt floor_step;
        Rational scaled = Rational(cur) * min_step();
        mpz_cdiv_q(floor_step.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
        BigInt from_power;
        if (is_small_integer(spec.gamma)) {
          BigInt p;
          mpz_ui_pow_ui(p.get_mpz_t(), k, static_cast<unsigned long>(spec.gamma));
          from_power = cur * p;
        } else {
          from_power = ceil_times_power(cur, k, spec.gamma);
        }
        terms.push_back(std::max(floor_step, from_power));
      }
      break;
    }
    case SequenceKind::explicit_terms:
      terms = spec.terms;
      break;
  }
  return IntegerSequence(std::move(terms), spec);
}

bool check_hadamard(const IntegerSequence& seq, double q) {
  const Rational qr = exact_rational(q);
  for (std::size_t k = 1; k < seq.size(); ++k) {
    // n_{k+1} * den >= q_num * n_k
    if (seq.term(k + 1) * qr.get_den() < qr.get_num() * seq.term(k)) return false;
  }
  return true;
}

bool check_polynomial_gap(const IntegerSequence& seq, double gamma) {
  if (seq.size() < 2) throw DomainError("polynomial gap check needs at least two terms");
  for (std::size_t k = 1; k < seq.size(); ++k) {
    if (compare_to_power(seq.term(k + 1), seq.term(k), k, gamma) < 0) return false;
  }
  return true;
}

Rational gap_ratio(const IntegerSequence& seq, std::size_t k) {
  if (k < 1 || k + 1 > seq.size()) throw DomainError("gap ratio index out of range");
  Rational r(seq.term(k), seq.term(k + 1));
  r.canonicalize();
  return r;
}

Rational delta_exact(const IntegerSequence& seq, std::size_t k) {
  if (seq.size() < 2) throw DomainError("delta sequence needs at least two terms");
  if (k == 1) return Rational(1);
  if (k < 2 || k + 1 > seq.size()) throw DomainError("delta_k needs 2 <= k <= N-1");
  return Rational(5) * (gap_ratio(seq, k - 1) + gap_ratio(seq, k));
}

std::vector<double> delta_sequence(const IntegerSequence& seq) {
  if (seq.size() < 2) throw DomainError("delta sequence needs at least two terms");
  std::vector<double> out;
  out.reserve(seq.size() - 1);
  for (std::size_t k = 1; k + 1 <= seq.size(); ++k) out.push_back(to_double(delta_exact(seq, k)));
  return out;
}

Rational gcd_sum(const IntegerSequence& seq) {
  // Off-diagonal terms equal 1/(a b) with a = n_i/g, b = n_j/g. The accumulator
  // keeps num/den unnormalised and extends den by lcm on every step.
  BigInt num = 0;
  BigInt den = 1;
  BigInt g, a, b, m, h;
  const auto terms = seq.terms();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = i + 1; j < terms.size(); ++j) {
      mpz_gcd(g.get_mpz_t(), terms[i].get_mpz_t(), terms[j].get_mpz_t());
      mpz_divexact(a.get_mpz_t(), terms[i].get_mpz_t(), g.get_mpz_t());
      mpz_divexact(b.get_mpz_t(), terms[j].get_mpz_t(), g.get_mpz_t());
      m = a * b;
      mpz_gcd(h.get_mpz_t(), den.get_mpz_t(), m.get_mpz_t());
      mpz_divexact(m.get_mpz_t(), m.get_mpz_t(), h.get_mpz_t());  // m / h
      num *= m;
      BigInt dh;
      mpz_divexact(dh.get_mpz_t(), den.get_mpz_t(), h.get_mpz_t());
      num += dh;
      den *= m;
    }
  }
  Rational out(num, den);
  out.canonicalize();
  return out + Rational(static_cast<unsigned long>(terms.size()));
}

double dyer_harman_sum(const IntegerSequence& seq) {
  CompensatedSum sum;
  const auto terms = seq.terms();
  BigInt g, a, b;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    sum.add(1.0);
    for (std::size_t j = i + 1; j < terms.size(); ++j) {
      mpz_gcd(g.get_mpz_t(), terms[i].get_mpz_t(), terms[j].get_mpz_t());
      mpz_divexact(a.get_mpz_t(), terms[i].get_mpz_t(), g.get_mpz_t());
      mpz_divexact(b.get_mpz_t(), terms[j].get_mpz_t(), g.get_mpz_t());
      a *= b;
      long exp = 0;
      const double mant = mpz_get_d_2exp(&exp, a.get_mpz_t());
      // 1/sqrt(mant * 2^exp)
      const double odd = (exp % 2 != 0) ? 2.0 : 1.0;
      const long half = (exp - (exp % 2 != 0 ? 1 : 0)) / 2;
      sum.add(std::ldexp(1.0 / std::sqrt(mant * odd), static_cast<int>(-half)));
    }
  }
  return sum.value();
}

std::uint64_t divisor_count(std::uint64_t k) {
  if (k == 0) throw DomainError("divisor_count needs k >= 1");
  std::uint64_t count = 0;
  for (std::uint64_t d = 1; d * d <= k; ++d) {
    if (k % d == 0) count += (d * d == k) ? 1 : 2;
  }
  return count;
}

double rho_gamma(std::uint64_t n, double gamma) {
  if (n == 0) throw DomainError("rho_gamma needs n >= 1");
  if (!(gamma > 0.5 && gamma < 1.0)) throw DomainError("rho_gamma needs gamma in (1/2, 1)");
  const double e = -(2.0 * gamma - 1.0);
  std::vector<std::uint64_t> divisors;
  for (std::uint64_t d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      divisors.push_back(d);
      if (d * d != n) divisors.push_back(n / d);
    }
  }
  std::sort(divisors.begin(), divisors.end());
  CompensatedSum sum;
  for (auto d : divisors) sum.add(std::pow(static_cast<double>(d), e));
  return sum.value();
}

CoefficientWeight CoefficientWeight::parse(const std::string& text) {
  CoefficientWeight w;
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const bool has_param = colon != std::string::npos;
  const double param = has_param ? std::stod(text.substr(colon + 1)) : 0.0;
  if (name == "rademacher-mensov" || name == "rademacher_mensov_eps") {
    if (!has_param || !(param > 0.0)) throw DomainError("rademacher-mensov needs eps > 0");
    w.kind = Kind::rademacher_mensov;
  } else if (name == "weber-divisor" || name == "weber_divisor") {
    w.kind = Kind::weber_divisor;
  } else if (name == "weber-rho" || name == "weber_rho") {
    if (!(param > 0.5 && param < 1.0)) throw DomainError("weber-rho needs gamma in (1/2,1)");
    w.kind = Kind::weber_rho;
  } else {
    throw DomainError("unknown coefficient condition kind '" + name + "'");
  }
  w.parameter = param;
  return w;
}

double coefficient_condition_partial_sum(std::span<const double> c, const CoefficientWeight& weight) {
  CompensatedSum sum;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const std::uint64_t k = i + 1;
    const double lk = std::log(static_cast<double>(k));
    double w = 0.0;
    switch (weight.kind) {
      case CoefficientWeight::Kind::rademacher_mensov:
        w = std::pow(lk, 3.0 + weight.parameter);
        break;
      case CoefficientWeight::Kind::weber_divisor:
        w = static_cast<double>(divisor_count(k)) * lk * lk;
        break;
      case CoefficientWeight::Kind::weber_rho:
        w = rho_gamma(k, weight.parameter) * lk * lk;
        break;
    }
    sum.add(c[i] * c[i] * w);
  }
  return sum.value();
}

void write_sequence(std::ostream& out, const IntegerSequence& seq) {
  for (const auto& t : seq.terms()) out << to_decimal(t) << '\n';
}

IntegerSequence read_sequence(std::istream& in) {
  std::vector<BigInt> terms;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      terms.push_back(parse_bigint(line));
    } catch (const DomainError& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return generate(SequenceSpec::explicit_list(std::move(terms)));
}

}  // namespace laclab
