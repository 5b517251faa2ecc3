#include "laclab/orbit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "laclab/error.hpp"
#include "laclab/numeric.hpp"
#include "laclab/philox.hpp"

static_assert(GMP_LIMB_BITS == 64, "limb extraction assumes 64-bit limbs");

namespace laclab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 64 bits of x starting at bit position pos (bits above the size read as 0).
std::uint64_t bits_at(const BigInt& x, std::size_t pos) {
  const std::size_t limb = pos / 64;
  const unsigned off = static_cast<unsigned>(pos % 64);
  std::uint64_t lo = mpz_getlimbn(x.get_mpz_t(), static_cast<mp_size_t>(limb)) >> off;
  if (off != 0) lo |= static_cast<std::uint64_t>(mpz_getlimbn(x.get_mpz_t(), static_cast<mp_size_t>(limb + 1))) << (64 - off);
  return lo;
}

// (x mod 2^m) / 2^m truncated to 53 bits; never rounds up to 1.
double low_bits_fraction(const BigInt& x, std::size_t m) {
  if (m == 0) return 0.0;
  std::uint64_t w;
  if (m >= 64) {
    w = bits_at(x, m - 64);
  } else {
    w = bits_at(x, 0) & ((std::uint64_t{1} << m) - 1);
    w <<= (64 - m);
  }
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

double reduce_unit(double u) {
  if (u >= 0.0 && u < 1.0) return u;
  const double r = u - std::floor(u);
  return r >= 1.0 ? 0.0 : r;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& text, const char* what) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw DomainError(std::string("cannot parse ") + what + " from '" + text + "'");
  }
  return v;
}

double harmonic_value(const std::vector<std::pair<double, double>>& c, double u) {
  double s = 0.0;
  for (std::size_t j = 1; j <= c.size(); ++j) {
    const auto [a, b] = c[j - 1];
    if (a == 0.0 && b == 0.0) continue;
    double t = static_cast<double>(j) * u;
    t -= std::floor(t);
    const double angle = kTwoPi * t;
    if (a != 0.0) s += a * std::cos(angle);
    if (b != 0.0) s += b * std::sin(angle);
  }
  return s;
}

const std::vector<std::pair<double, double>>& erdos_fortet_coefficients() {
  static const std::vector<std::pair<double, double>> c{{1.0, 0.0}, {1.0, 0.0}};
  return c;
}

// Single nonzero frequency j with amplitude r, if any.
std::optional<std::pair<std::size_t, double>> single_frequency(const std::vector<std::pair<double, double>>& c) {
  std::optional<std::pair<std::size_t, double>> found;
  for (std::size_t j = 1; j <= c.size(); ++j) {
    const auto [a, b] = c[j - 1];
    if (a == 0.0 && b == 0.0) continue;
    if (found) return std::nullopt;
    found = std::make_pair(j, std::hypot(a, b));
  }
  return found;
}

// Points where |f| crosses level, from a scan of 4096 cells plus bisection.
std::vector<double> level_crossings(const PeriodicFunction& f, double level) {
  constexpr int cells = 4096;
  std::vector<double> out;
  auto g = [&](double u) { return std::fabs(f.eval(u)) - level; };
  double a = 0.0;
  double ga = g(a);
  for (int i = 1; i <= cells; ++i) {
    const double b = static_cast<double>(i) / cells;
    const double gb = i == cells ? g(0.0) : g(b);
    if ((ga < 0.0) != (gb < 0.0)) {
      double lo = a, hi = b;
      const bool lo_neg = ga < 0.0;
      for (int it = 0; it < 80 && hi - lo > 1e-17; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((g(mid) < 0.0) == lo_neg) lo = mid; else hi = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    a = b;
    ga = gb;
  }
  return out;
}

double numeric_sup_abs(const PeriodicFunction& f) {
  constexpr int cells = 8192;
  double best = 0.0;
  double arg = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double u = static_cast<double>(i) / cells;
    const double v = std::fabs(f.eval(u));
    if (v > best) {
      best = v;
      arg = u;
    }
  }
  double step = 1.0 / cells;
  for (int round = 0; round < 6; ++round) {
    const double lo = arg - step;
    for (int i = 0; i <= 64; ++i) {
      const double u = lo + 2.0 * step * i / 64;
      const double v = std::fabs(f.eval(u));
      if (v > best) {
        best = v;
        arg = u;
      }
    }
    step /= 32;
  }
  return best;
}

double numeric_tail(const PeriodicFunction& f, double level) {
  auto cuts = level_crossings(f, level);
  for (double b : f.breakpoints()) cuts.push_back(b);
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  CompensatedSum m;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (std::fabs(f.eval(mid)) >= level) m.add(cuts[i + 1] - cuts[i]);
  }
  return std::clamp(m.value(), 0.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------

double low_bits_fraction_of(const BigInt& x, std::size_t bits) { return low_bits_fraction(x, bits); }

double FixedPoint::to_double() const { return low_bits_fraction(numerator, bits); }

Rational FixedPoint::to_rational() const {
  BigInt den = 1;
  den <<= static_cast<mp_bitcnt_t>(bits);
  Rational r(numerator, den);
  r.canonicalize();
  return r;
}

FixedPoint sample_point(std::uint64_t seed, std::uint64_t replica, std::size_t bits) {
  if (bits == 0) throw DomainError("sample_point needs B >= 1");
  CounterRng rng(seed, replica, Stream::x_bits);
  const std::size_t words = (bits + 63) / 64;
  std::vector<std::uint64_t> w(words);
  for (auto& v : w) v = rng.next_u64();
  FixedPoint x;
  x.bits = bits;
  mpz_import(x.numerator.get_mpz_t(), words, 1, sizeof(std::uint64_t), 0, 0, w.data());
  mpz_fdiv_q_2exp(x.numerator.get_mpz_t(), x.numerator.get_mpz_t(), 64 * words - bits);
  return x;
}

FixedPoint frac_multiple(const FixedPoint& x, const BigInt& n, std::size_t guard_bits) {
  if (sgn(n) < 0) throw DomainError("frac_multiple needs n >= 0");
  if (sgn(x.numerator) < 0 || bit_length(x.numerator) > x.bits) throw DomainError("fixed-point numerator outside [0, 2^B)");
  if (sgn(n) > 0 && x.bits < ceil_log2(n) + guard_bits) {
    throw GuardError("guard-bit rule violated: B=" + std::to_string(x.bits) + " < ceil(log2 n) + " +
                     std::to_string(guard_bits) + " = " + std::to_string(ceil_log2(n) + guard_bits));
  }
  FixedPoint out;
  out.bits = x.bits;
  Multiplier(n).apply(x.numerator, x.bits, out.numerator);
  return out;
}

Multiplier::Multiplier(const BigInt& n) : n_(n) {
  if (sgn(n) < 0) throw DomainError("multiplier must be nonnegative");
  if (sgn(n) == 0) return;
  if (mpz_popcount(n.get_mpz_t()) == 1) {
    shift_only_ = true;
    digits_.emplace_back(mpz_scan1(n.get_mpz_t(), 0), 1);
    return;
  }
  // Non-adjacent form: n = pos - neg with no two adjacent nonzero digits.
  BigInt half = n >> 1;
  BigInt three_halves = n + half;
  BigInt changed = half ^ three_halves;
  BigInt pos = three_halves & changed;
  BigInt neg = half & changed;
  const auto weight = mpz_popcount(pos.get_mpz_t()) + mpz_popcount(neg.get_mpz_t());
  if (weight > 16) return;
  use_digits_ = true;
  for (const auto& [digits, sign] : {std::pair<const BigInt*, int>{&pos, 1}, {&neg, -1}}) {
    for (mp_bitcnt_t b = mpz_scan1(digits->get_mpz_t(), 0); b != ~mp_bitcnt_t{0};
         b = mpz_scan1(digits->get_mpz_t(), b + 1)) {
      digits_.emplace_back(b, sign);
    }
  }
}

void Multiplier::apply(const BigInt& x, std::size_t bits, BigInt& out) const {
  if (&x == &out) throw DomainError("Multiplier::apply does not support aliasing");
  const auto nbits = static_cast<mp_bitcnt_t>(bits);
  if (sgn(n_) == 0) {
    out = 0;
    return;
  }
  if (shift_only_) {
    const std::size_t s = digits_.front().first;
    if (s >= bits) {
      out = 0;
      return;
    }
    mpz_fdiv_r_2exp(out.get_mpz_t(), x.get_mpz_t(), nbits - s);
    mpz_mul_2exp(out.get_mpz_t(), out.get_mpz_t(), s);
    return;
  }
  if (use_digits_) {
    thread_local BigInt term;
    out = 0;
    for (const auto& [s, sign] : digits_) {
      if (s >= bits) continue;
      mpz_fdiv_r_2exp(term.get_mpz_t(), x.get_mpz_t(), nbits - s);
      mpz_mul_2exp(term.get_mpz_t(), term.get_mpz_t(), s);
      if (sign > 0) out += term; else out -= term;
    }
    mpz_fdiv_r_2exp(out.get_mpz_t(), out.get_mpz_t(), nbits);
    return;
  }
  mpz_mul(out.get_mpz_t(), x.get_mpz_t(), n_.get_mpz_t());
  mpz_fdiv_r_2exp(out.get_mpz_t(), out.get_mpz_t(), nbits);
}

double Multiplier::fraction(const BigInt& x, std::size_t bits, BigInt& scratch) const {
  if (shift_only_) {
    const std::size_t s = digits_.front().first;
    return s >= bits ? 0.0 : low_bits_fraction(x, bits - s);
  }
  apply(x, bits, scratch);
  return low_bits_fraction(scratch, bits);
}

// ---------------------------------------------------------------------------

PeriodicFunction PeriodicFunction::cosine() { return PeriodicFunction(Harmonic{{{1.0, 0.0}}}); }

PeriodicFunction PeriodicFunction::harmonic(std::vector<std::pair<double, double>> coefficients) {
  if (coefficients.empty()) throw DomainError("harmonic needs at least one coefficient pair");
  for (const auto& [a, b] : coefficients) {
    if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("harmonic coefficients must be finite");
  }
  return PeriodicFunction(Harmonic{std::move(coefficients)});
}

PeriodicFunction PeriodicFunction::centered_frac() { return PeriodicFunction(CenteredFrac{}); }
PeriodicFunction PeriodicFunction::sign_sine() { return PeriodicFunction(SignSine{}); }
PeriodicFunction PeriodicFunction::erdos_fortet() { return PeriodicFunction(ErdosFortet{}); }

PeriodicFunction PeriodicFunction::heavy_tail(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("heavy_tail needs alpha in (0,2)");
  return PeriodicFunction(HeavyTail{alpha});
}

PeriodicFunction PeriodicFunction::centered_indicator(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("indicator needs t in [0,1]");
  return PeriodicFunction(CenteredIndicator{t});
}

PeriodicFunction PeriodicFunction::truncated(const PeriodicFunction& base, double level) {
  if (!(level > 0.0) || !std::isfinite(level)) throw DomainError("truncation level must be positive and finite");
  return PeriodicFunction(Truncated{std::make_shared<const PeriodicFunction>(base), level});
}

PeriodicFunction PeriodicFunction::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  auto no_args = [&](PeriodicFunction f) {
    if (colon != std::string::npos) throw DomainError("function '" + head + "' takes no parameters");
    return f;
  };
  if (head == "cos") return no_args(cosine());
  if (head == "centered-frac") return no_args(centered_frac());
  if (head == "sign-sine") return no_args(sign_sine());
  if (head == "erdos-fortet") return no_args(erdos_fortet());
  if (colon == std::string::npos) throw DomainError("unknown or incomplete function '" + text + "'");
  if (head == "heavy-tail") return heavy_tail(parse_real(rest, "alpha"));
  if (head == "indicator") return centered_indicator(parse_real(rest, "t"));
  if (head == "harmonic") {
    std::vector<std::pair<double, double>> c;
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto end = std::min(rest.find(';', start), rest.size());
      const std::string pair = rest.substr(start, end - start);
      const auto comma = pair.find(',');
      if (comma == std::string::npos) throw DomainError("harmonic pair '" + pair + "' needs the form a,b");
      c.emplace_back(parse_real(pair.substr(0, comma), "a_j"), parse_real(pair.substr(comma + 1), "b_j"));
      start = end + 1;
    }
    return harmonic(std::move(c));
  }
  if (head == "truncated") {
    const auto second = rest.find(':');
    if (second == std::string::npos) throw DomainError("truncated needs the form truncated:T:base");
    return truncated(parse(rest.substr(second + 1)), parse_real(rest.substr(0, second), "truncation level"));
  }
  throw DomainError("unknown function '" + head + "'");
}

std::string PeriodicFunction::to_string() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Harmonic>) {
          if (v.coefficients.size() == 1 && v.coefficients[0] == std::make_pair(1.0, 0.0)) return "cos";
          std::string s = "harmonic:";
          for (std::size_t j = 0; j < v.coefficients.size(); ++j) {
            if (j) s += ';';
            s += format_real(v.coefficients[j].first) + ',' + format_real(v.coefficients[j].second);
          }
          return s;
        } else if constexpr (std::is_same_v<T, CenteredFrac>) {
          return "centered-frac";
        } else if constexpr (std::is_same_v<T, SignSine>) {
          return "sign-sine";
        } else if constexpr (std::is_same_v<T, ErdosFortet>) {
          return "erdos-fortet";
        } else if constexpr (std::is_same_v<T, HeavyTail>) {
          return "heavy-tail:" + format_real(v.alpha);
        } else if constexpr (std::is_same_v<T, CenteredIndicator>) {
          return "indicator:" + format_real(v.t);
        } else {
          return "truncated:" + format_real(v.level) + ":" + v.base->to_string();
        }
      },
      v_);
}

double PeriodicFunction::eval(double u) const {
  u = reduce_unit(u);
  return std::visit(
      [u](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Harmonic>) {
          return harmonic_value(v.coefficients, u);
        } else if constexpr (std::is_same_v<T, CenteredFrac>) {
          return u - 0.5;
        } else if constexpr (std::is_same_v<T, SignSine>) {
          if (u == 0.0 || u == 0.5) return 0.0;
          return u < 0.5 ? 1.0 : -1.0;
        } else if constexpr (std::is_same_v<T, ErdosFortet>) {
          return harmonic_value(erdos_fortet_coefficients(), u);
        } else if constexpr (std::is_same_v<T, HeavyTail>) {
          if (u == 0.0) return 0.0;
          const double d = u - 0.5;
          if (d == 0.0) throw SingularityError("heavy_tail is singular at x = 1/2");
          const double m = std::pow(std::fabs(d), -1.0 / v.alpha);
          return d < 0.0 ? -m : m;
        } else if constexpr (std::is_same_v<T, CenteredIndicator>) {
          return (u <= v.t ? 1.0 : 0.0) - v.t;
        } else {
          if (const auto* h = std::get_if<HeavyTail>(&v.base->variant()); h && u == 0.5) return 0.0;
          const double b = v.base->eval(u);
          return std::fabs(b) <= v.level ? b : 0.0;
        }
      },
      v_);
}

double PeriodicFunction::eval_exact(const BigInt& numerator, std::size_t bits) const {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SignSine>) {
          if (sgn(numerator) == 0) return 0.0;
          BigInt half = 1;
          half <<= static_cast<mp_bitcnt_t>(bits - 1);
          const int side = cmp(numerator, half);
          if (side == 0) return 0.0;
          return side < 0 ? 1.0 : -1.0;
        } else if constexpr (std::is_same_v<T, HeavyTail>) {
          if (sgn(numerator) == 0) return 0.0;
          BigInt offset = 1;
          offset <<= static_cast<mp_bitcnt_t>(bits - 1);
          offset = numerator - offset;
          if (sgn(offset) == 0) throw SingularityError("heavy_tail is singular at x = 1/2");
          long e = 0;
          const double mant = mpz_get_d_2exp(&e, offset.get_mpz_t());
          // |x - 1/2| = |mant| 2^(e - bits); raise to -1/alpha in log space.
          const double log_mag = std::log(std::fabs(mant)) + static_cast<double>(e - static_cast<long>(bits)) * std::numbers::ln2;
          const double m = std::exp(-log_mag / v.alpha);
          return sgn(offset) < 0 ? -m : m;
        } else if constexpr (std::is_same_v<T, CenteredIndicator>) {
          BigInt den = 1;
          den <<= static_cast<mp_bitcnt_t>(bits);
          const bool inside = Rational(numerator, den) <= exact_rational(v.t);
          return (inside ? 1.0 : 0.0) - v.t;
        } else if constexpr (std::is_same_v<T, Truncated>) {
          double b;
          if (std::holds_alternative<HeavyTail>(v.base->variant())) {
            try {
              b = v.base->eval_exact(numerator, bits);
            } catch (const SingularityError&) {
              return 0.0;
            }
          } else {
            b = v.base->eval_exact(numerator, bits);
          }
          return std::fabs(b) <= v.level ? b : 0.0;
        } else {
          return eval(low_bits_fraction(numerator, bits));
        }
      },
      v_);
}

bool PeriodicFunction::needs_exact_argument() const {
  if (const auto* t = std::get_if<Truncated>(&v_)) return t->base->needs_exact_argument();
  return std::holds_alternative<SignSine>(v_) || std::holds_alternative<HeavyTail>(v_) ||
         std::holds_alternative<CenteredIndicator>(v_);
}

bool PeriodicFunction::is_bounded() const { return !std::holds_alternative<HeavyTail>(v_); }

const PeriodicFunction::HeavyTail* PeriodicFunction::heavy_tail_part() const {
  if (const auto* h = std::get_if<HeavyTail>(&v_)) return h;
  if (const auto* t = std::get_if<Truncated>(&v_)) return t->base->heavy_tail_part();
  return nullptr;
}

double PeriodicFunction::sup_abs() const {
  return std::visit(
      [this](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Harmonic>) {
          if (auto single = single_frequency(v.coefficients)) return single->second;
          return numeric_sup_abs(*this);
        } else if constexpr (std::is_same_v<T, CenteredFrac>) {
          return 0.5;
        } else if constexpr (std::is_same_v<T, SignSine>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, ErdosFortet>) {
          return 2.0;
        } else if constexpr (std::is_same_v<T, HeavyTail>) {
          return std::numeric_limits<double>::infinity();
        } else if constexpr (std::is_same_v<T, CenteredIndicator>) {
          return std::max(v.t, 1.0 - v.t);
        } else {
          if (const auto* h = std::get_if<HeavyTail>(&v.base->variant())) {
            return v.level >= std::pow(2.0, 1.0 / h->alpha) ? v.level : 0.0;
          }
          const double s = v.base->sup_abs();
          return s <= v.level ? s : numeric_sup_abs(*this);
        }
      },
      v_);
}

double PeriodicFunction::total_variation() const {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Harmonic>) {
          double s = 0.0;
          for (std::size_t j = 1; j <= v.coefficients.size(); ++j) {
            s += 4.0 * static_cast<double>(j) * std::hypot(v.coefficients[j - 1].first, v.coefficients[j - 1].second);
          }
          return s;
        } else if constexpr (std::is_same_v<T, CenteredFrac>) {
          return 2.0;
        } else if constexpr (std::is_same_v<T, SignSine>) {
          return 4.0;
        } else if constexpr (std::is_same_v<T, ErdosFortet>) {
          // Extremes 2 at 0, -9/8 where cos 2 pi x = -1/4, and 0 at 1/2.
          return 8.5;
        } else if constexpr (std::is_same_v<T, HeavyTail>) {
          throw DomainError("heavy_tail has unbounded variation");
        } else if constexpr (std::is_same_v<T, CenteredIndicator>) {
          return v.t >= 1.0 ? 0.0 : 2.0;
        } else {
          if (const auto* h = std::get_if<HeavyTail>(&v.base->variant())) {
            return v.level >= std::pow(2.0, 1.0 / h->alpha) ? 4.0 * v.level : 0.0;
          }
          if (v.level >= v.base->sup_abs()) return v.base->total_variation();
          throw DomainError("variation of " + v.base->to_string() + " truncated below its supremum is not catalogued");
        }
      },
      v_);
}

std::vector<double> PeriodicFunction::breakpoints() const {
  return std::visit(
      [](const auto& v) -> std::vector<double> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Harmonic> || std::is_same_v<T, ErdosFortet>) {
          return {};
        } else if constexpr (std::is_same_v<T, CenteredFrac>) {
          return {0.0};
        } else if constexpr (std::is_same_v<T, SignSine> || std::is_same_v<T, HeavyTail>) {
          return {0.0, 0.5};
        } else if constexpr (std::is_same_v<T, CenteredIndicator>) {
          if (v.t > 0.0 && v.t < 1.0) return {0.0, v.t};
          return {0.0};
        } else {
          auto pts = v.base->breakpoints();
          if (const auto* h = std::get_if<HeavyTail>(&v.base->variant())) {
            const double r = std::pow(v.level, -h->alpha);
            if (r < 0.5) {
              pts.push_back(0.5 - r);
              pts.push_back(0.5 + r);
            }
          } else if (v.level < v.base->sup_abs()) {
            for (double c : level_crossings(*v.base, v.level)) pts.push_back(c);
          }
          std::sort(pts.begin(), pts.end());
          pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
          return pts;
        }
      },
      v_);
}

std::optional<std::vector<std::pair<double, double>>> PeriodicFunction::fourier_coefficients() const {
  if (const auto* h = std::get_if<Harmonic>(&v_)) return h->coefficients;
  if (std::holds_alternative<ErdosFortet>(v_)) return erdos_fortet_coefficients();
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::size_t guarded_bits(const IntegerSequence& seq, std::size_t count, std::size_t guard_bits) {
  if (count == 0 || count > seq.size()) throw DomainError("term count out of range");
  return std::max<std::size_t>(1, ceil_log2(seq.term(count)) + guard_bits);
}

OrbitEvaluator::OrbitEvaluator(const IntegerSequence& seq, std::size_t count, std::size_t bits, std::size_t guard_bits)
    : bits_(bits) {
  if (count > seq.size()) throw DomainError("N exceeds the sequence length");
  if (count > 0 && bits < ceil_log2(seq.term(count)) + guard_bits) {
    throw GuardError("guard-bit rule violated: B=" + std::to_string(bits) + " but n_N needs " +
                     std::to_string(ceil_log2(seq.term(count)) + guard_bits));
  }
  mult_.reserve(count);
  step_.assign(count, 0);
  for (std::size_t k = 1; k <= count; ++k) {
    mult_.emplace_back(seq.term(k));
    if (k > 1 && mpz_divisible_p(seq.term(k).get_mpz_t(), seq.term(k - 1).get_mpz_t())) {
      BigInt r = seq.term(k) / seq.term(k - 1);
      if (mpz_sizeinbase(r.get_mpz_t(), 2) <= 256) step_[k - 1] = std::move(r);
    }
  }
}

void OrbitEvaluator::advance(const FixedPoint& x, std::size_t i, bool have_previous, BigInt& current) const {
  if (have_previous && step_[i] != 0 && !mult_[i].is_shift()) {
    mpz_mul(current.get_mpz_t(), current.get_mpz_t(), step_[i].get_mpz_t());
    mpz_fdiv_r_2exp(current.get_mpz_t(), current.get_mpz_t(), bits_);
  } else {
    mult_[i].apply(x.numerator, bits_, current);
  }
}

void OrbitEvaluator::fractions(const FixedPoint& x, std::vector<double>& out) const {
  if (x.bits != bits_) throw DomainError("sample precision does not match the evaluator");
  thread_local BigInt scratch;
  thread_local BigInt current;
  out.resize(mult_.size());
  bool have_previous = false;
  for (std::size_t i = 0; i < mult_.size(); ++i) {
    if (mult_[i].is_shift()) {
      out[i] = mult_[i].fraction(x.numerator, bits_, scratch);
      have_previous = false;
    } else {
      advance(x, i, have_previous, current);
      out[i] = low_bits_fraction(current, bits_);
      have_previous = true;
    }
  }
}

FixedPoint OrbitEvaluator::fraction(const FixedPoint& x, std::size_t k) const {
  if (x.bits != bits_) throw DomainError("sample precision does not match the evaluator");
  FixedPoint out;
  out.bits = bits_;
  mult_.at(k - 1).apply(x.numerator, bits_, out.numerator);
  return out;
}

void OrbitEvaluator::values(const PeriodicFunction& f, const FixedPoint& x, std::vector<double>& out) const {
  if (x.bits != bits_) throw DomainError("sample precision does not match the evaluator");
  thread_local BigInt scratch;
  thread_local BigInt current;
  out.resize(mult_.size());
  const bool exact = f.needs_exact_argument();
  bool have_previous = false;
  for (std::size_t i = 0; i < mult_.size(); ++i) {
    try {
      if (!exact && mult_[i].is_shift()) {
        out[i] = f.eval(mult_[i].fraction(x.numerator, bits_, scratch));
        have_previous = false;
        continue;
      }
      advance(x, i, have_previous, current);
      have_previous = true;
      out[i] = exact ? f.eval_exact(current, bits_) : f.eval(low_bits_fraction(current, bits_));
    } catch (const SingularityError& e) {
      throw SingularityError(std::string(e.what()) + " (term k=" + std::to_string(i + 1) + ")", i + 1);
    }
  }
}

double OrbitEvaluator::partial_sum(const PeriodicFunction& f, const FixedPoint& x, std::size_t count) const {
  if (count > mult_.size()) throw DomainError("N exceeds the prepared terms");
  thread_local std::vector<double> vals;
  values(f, x, vals);
  CompensatedSum s;
  for (std::size_t i = 0; i < count; ++i) s.add(vals[i]);
  return s.value();
}

double partial_sum(const PeriodicFunction& f, const IntegerSequence& seq, const FixedPoint& x, std::size_t count) {
  if (count == 0) return 0.0;
  return OrbitEvaluator(seq, count, x.bits).partial_sum(f, x, count);
}

// ---------------------------------------------------------------------------

double mean_value(const PeriodicFunction& f) {
  if (!f.is_bounded()) throw DomainError("mean of the untruncated heavy tail is not an absolutely convergent integral");
  return integrate_pieces([&](double u) { return f.eval(u); }, f.breakpoints());
}

double l2_norm(const PeriodicFunction& f) {
  if (!f.is_square_integrable()) throw DomainError("function is not square-integrable");
  if (auto c = f.fourier_coefficients()) {
    double s = 0.0;
    for (const auto& [a, b] : *c) s += 0.5 * (a * a + b * b);
    return std::sqrt(s);
  }
  return std::sqrt(integrate_pieces([&](double u) { const double v = f.eval(u); return v * v; }, f.breakpoints()));
}

double shift_energy(const PeriodicFunction& f, double h) {
  if (!f.is_square_integrable()) {
    throw DomainError(f.to_string() + " is not square-integrable; truncate it first");
  }
  if (auto c = f.fourier_coefficients()) {
    double s = 0.0;
    for (std::size_t j = 1; j <= c->size(); ++j) {
      const auto [a, b] = (*c)[j - 1];
      double t = static_cast<double>(j) * h;
      t -= std::floor(t);
      const double sn = std::sin(kTwoPi * t);
      s += 2.0 * (a * a + b * b) * sn * sn;
    }
    return s;
  }
  if (std::holds_alternative<PeriodicFunction::CenteredFrac>(f.variant())) {
    const double s = reduce_unit(2.0 * h);
    return s * (1.0 - s);
  }
  std::vector<double> cuts;
  for (double d : f.breakpoints()) {
    cuts.push_back(reduce_unit(d + h));
    cuts.push_back(reduce_unit(d - h));
  }
  return integrate_pieces(
      [&](double x) {
        const double diff = f.eval(x + h) - f.eval(x - h);
        return diff * diff;
      },
      cuts);
}

double l2_modulus(const PeriodicFunction& f, double delta) {
  if (!(delta >= 0.0)) throw DomainError("l2_modulus needs delta >= 0");
  if (!f.is_square_integrable()) {
    throw DomainError(f.to_string() + " is not square-integrable; truncate it first");
  }
  delta = std::min(delta, 0.5);
  if (delta == 0.0) return 0.0;
  if (auto c = f.fourier_coefficients()) {
    if (auto single = single_frequency(*c)) {
      const double j = static_cast<double>(single->first);
      const double s = j * delta >= 0.25 ? 1.0 : std::sin(kTwoPi * j * delta);
      return std::sqrt(2.0) * single->second * std::fabs(s);
    }
  }
  if (std::holds_alternative<PeriodicFunction::CenteredFrac>(f.variant())) {
    const double h = std::min(delta, 0.25);
    return std::sqrt(2.0 * h * (1.0 - 2.0 * h));
  }
  constexpr int grid = 1024;
  double best = shift_energy(f, delta);
  double arg = delta;
  for (int i = 1; i < grid; ++i) {
    const double h = delta * i / grid;
    const double e = shift_energy(f, h);
    if (e > best) {
      best = e;
      arg = h;
    }
  }
  double step = delta / grid;
  for (int round = 0; round < 3; ++round) {
    const double lo = std::max(0.0, arg - step);
    const double hi = std::min(delta, arg + step);
    for (int i = 0; i <= 32; ++i) {
      const double h = lo + (hi - lo) * i / 32;
      const double e = shift_energy(f, h);
      if (e > best) {
        best = e;
        arg = h;
      }
    }
    step = (hi - lo) / 32;
  }
  return std::sqrt(std::max(best, 0.0));
}

double tail_measure(const PeriodicFunction& f, double level) {
  if (std::isnan(level)) throw DomainError("tail level is NaN");
  if (level <= 0.0) return 1.0;
  using PF = PeriodicFunction;
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PF::Harmonic>) {
          if (auto single = single_frequency(v.coefficients)) {
            const double r = single->second;
            return level >= r ? 0.0 : 2.0 / std::numbers::pi * std::acos(level / r);
          }
          return level > f.sup_abs() ? 0.0 : numeric_tail(f, level);
        } else if constexpr (std::is_same_v<T, PF::ErdosFortet>) {
          return level >= 2.0 ? 0.0 : numeric_tail(f, level);
        } else if constexpr (std::is_same_v<T, PF::CenteredFrac>) {
          return level >= 0.5 ? 0.0 : 1.0 - 2.0 * level;
        } else if constexpr (std::is_same_v<T, PF::SignSine>) {
          return level <= 1.0 ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, PF::HeavyTail>) {
          return std::min(1.0, 2.0 * std::pow(level, -v.alpha));
        } else if constexpr (std::is_same_v<T, PF::CenteredIndicator>) {
          return (1.0 - v.t >= level ? v.t : 0.0) + (v.t >= level ? 1.0 - v.t : 0.0);
        } else {
          if (level > v.level) return 0.0;
          // mu{level <= |f| <= L} = mu{|f| >= level} - mu{|f| > L}
          const bool heavy = std::holds_alternative<PF::HeavyTail>(v.base->variant());
          const double above = heavy ? tail_measure(*v.base, v.level)
                                     : tail_measure(*v.base, std::nextafter(v.level, std::numeric_limits<double>::infinity()));
          return std::max(0.0, tail_measure(*v.base, level) - above);
        }
      },
      f.variant());
}

bool TruncationSchedule::meets_tail_bound() const {
  for (std::size_t k = 1; k <= tails.size(); ++k) {
    if (tails[k - 1] > 1.0 / (static_cast<double>(k) * static_cast<double>(k))) return false;
  }
  return true;
}

TruncationSchedule truncation_schedule(const PeriodicFunction& f, std::size_t count, TruncationRule rule) {
  if (count == 0) throw DomainError("truncation schedule needs K >= 1");
  TruncationSchedule s;
  s.rule = rule;
  s.levels.reserve(count);
  if (const auto* h = std::get_if<PeriodicFunction::HeavyTail>(&f.variant())) {
    for (std::size_t k = 1; k <= count; ++k) {
      const double kk = static_cast<double>(k);
      const double base = rule == TruncationRule::root ? kk : 2.0 * kk * kk;
      s.levels.push_back(std::pow(base, 1.0 / h->alpha));
    }
  } else {
    double level = f.sup_abs();
    if (level <= 0.0) level = std::numeric_limits<double>::min();
    if (tail_measure(f, level) > 0.0) level = std::nextafter(level, std::numeric_limits<double>::infinity());
    s.levels.assign(count, level);
  }
  for (double t : s.levels) s.tails.push_back(tail_measure(f, t));
  return s;
}

std::string to_string(SeriesVerdict v) {
  switch (v) {
    case SeriesVerdict::plausibly_convergent: return "plausibly_convergent";
    case SeriesVerdict::plausibly_divergent: return "plausibly_divergent";
    case SeriesVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

void ConditionReport::write_csv(std::ostream& out) const {
  out << "k,T_k,delta_k,omega2_term,partial_sum\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.k, r.level, r.delta, r.omega_term, r.partial_sum);
    out << buf;
  }
}

ConditionReport condition_maingap(const PeriodicFunction& f, const IntegerSequence& seq, std::size_t count,
                                  TruncationRule rule) {
  const auto deltas = delta_sequence(seq);
  if (count == 0 || count > deltas.size()) {
    throw DomainError("K must lie in [1, " + std::to_string(deltas.size()) + "] for this sequence");
  }
  const auto schedule = truncation_schedule(f, count, rule);
  ConditionReport report;
  report.rule = rule;
  CompensatedSum running;
  for (std::size_t k = 1; k <= count; ++k) {
    ConditionRow row{};
    row.k = k;
    row.level = schedule.levels[k - 1];
    row.delta = deltas[k - 1];
    row.level_term = row.level * std::pow(row.delta, 0.25);
    const double h = std::min(8.0 * std::sqrt(row.delta), 0.5);
    const bool untouched = f.is_bounded() && row.level >= f.sup_abs();
    const double omega = untouched ? l2_modulus(f, h) : l2_modulus(PeriodicFunction::truncated(f, row.level), h);
    row.omega_term = std::sqrt(omega);
    row.term = row.level_term + row.omega_term;
    running.add(row.term);
    row.partial_sum = running.value();
    report.rows.push_back(row);
  }

  // Decay diagnostics over the second half of the window (k >= 2).
  report.window_begin = std::max<std::size_t>(2, count - count / 2 + 1);
  report.window_end = count;
  std::vector<std::pair<double, double>> pts;
  bool all_zero = true;
  for (std::size_t k = report.window_begin; k <= count; ++k) {
    const double t = report.rows[k - 1].term;
    if (t > 0.0) {
      all_zero = false;
      pts.emplace_back(std::log(static_cast<double>(k)), std::log(t));
    }
  }
  char buf[256];
  if (report.window_begin > count || count - report.window_begin + 1 < 3) {
    report.verdict = SeriesVerdict::inconclusive;
    report.diagnostic = "window too short for a trend (need K >= 5)";
    return report;
  }
  if (all_zero) {
    report.verdict = SeriesVerdict::plausibly_convergent;
    report.diagnostic = "all terms vanish on the window";
    return report;
  }
  if (pts.size() < 3) {
    report.verdict = SeriesVerdict::inconclusive;
    report.diagnostic = "too few positive terms on the window";
    return report;
  }
  double mx = 0, my = 0;
  for (auto [x, y] : pts) { mx += x; my += y; }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0, sxx = 0;
  for (auto [x, y] : pts) { sxy += (x - mx) * (y - my); sxx += (x - mx) * (x - mx); }
  const double slope = sxy / sxx;
  double log_ratio = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) log_ratio += pts[i].second - pts[i - 1].second;
  const double mean_ratio = std::exp(log_ratio / static_cast<double>(pts.size() - 1));
  report.decay_exponent = slope;
  if (mean_ratio <= 0.9 || slope < -1.2) {
    report.verdict = SeriesVerdict::plausibly_convergent;
  } else if (slope > -0.8 && mean_ratio > 0.95) {
    report.verdict = SeriesVerdict::plausibly_divergent;
  } else {
    report.verdict = SeriesVerdict::inconclusive;
  }
  std::snprintf(buf, sizeof buf,
                "finite-window diagnostic on k=%zu..%zu: log-log slope %.4g, mean term ratio %.4g; not a convergence proof",
                report.window_begin, report.window_end, slope, mean_ratio);
  report.diagnostic = buf;
  return report;
}

}  // namespace laclab
