#include "isingdyn/real.hpp"

#include "isingdyn/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace isingdyn {

namespace {
unsigned bits_to_digits(unsigned bits) {
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}
}  // namespace

unsigned default_precision_bits() {
    static const unsigned bits = [] {
        if (const char* env = std::getenv("ISINGDYN_PREC_BITS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 64 && v <= 1 << 20) return static_cast<unsigned>(v);
        }
        return 256u;
    }();
    return bits;
}

namespace {
const bool precision_initialized = [] {
    Real::default_precision(bits_to_digits(default_precision_bits()));
    return true;
}();
}  // namespace

PrecisionScope::PrecisionScope(unsigned bits) : saved_digits_(Real::default_precision()) {
    Real::default_precision(bits_to_digits(bits));
}

PrecisionScope::~PrecisionScope() { Real::default_precision(saved_digits_); }

unsigned current_precision_bits() {
    return static_cast<unsigned>(Real::default_precision() / 0.30102999566398120);
}

Real to_real(const mpq_class& q) {
    Real r;
    mpfr_set_q(r.backend().data(), q.get_mpq_t(), MPFR_RNDN);
    return r;
}

Real to_real(const mpz_class& z) {
    Real r;
    mpfr_set_z(r.backend().data(), z.get_mpz_t(), MPFR_RNDN);
    return r;
}

mpq_class to_rational(const Real& x) {
    require(mpfr_number_p(x.backend().data()), ErrorKind::InvalidArgument, "not a finite number");
    if (mpfr_zero_p(x.backend().data())) return 0;
    mpz_class m;
    mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), x.backend().data());
    mpq_class q(m);
    if (e > 0) {
        mpz_class s = 1;
        s <<= static_cast<unsigned long>(e);
        q *= s;
    } else if (e < 0) {
        mpz_class s = 1;
        s <<= static_cast<unsigned long>(-e);
        q /= s;
    }
    q.canonicalize();
    return q;
}

Real real_pi() {
    Real r;
    mpfr_const_pi(r.backend().data(), MPFR_RNDN);
    return r;
}

Real ulp_slack() {
    Real r = 1;
    return ldexp(r, -static_cast<int>(current_precision_bits()) + 8);
}

double to_double(const Real& x) { return x.convert_to<double>(); }

std::string to_string(const Real& x, int digits) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

Cx operator+(const Cx& a, const Cx& b) { return {Real(a.re + b.re), Real(a.im + b.im)}; }
Cx operator-(const Cx& a, const Cx& b) { return {Real(a.re - b.re), Real(a.im - b.im)}; }
Cx operator*(const Cx& a, const Cx& b) {
    return {Real(a.re * b.re - a.im * b.im), Real(a.re * b.im + a.im * b.re)};
}
Cx operator/(const Cx& a, const Cx& b) {
    Real d = b.re * b.re + b.im * b.im;
    return {Real((a.re * b.re + a.im * b.im) / d), Real((a.im * b.re - a.re * b.im) / d)};
}
Cx cx_conj(const Cx& a) { return {a.re, Real(-a.im)}; }
Real cx_norm(const Cx& a) { return a.re * a.re + a.im * a.im; }
Real cx_abs(const Cx& a) { return sqrt(cx_norm(a)); }
Real cx_arg(const Cx& a) { return atan2(a.im, a.re); }
Cx cx_expi(const Real& theta) { return {Real(cos(theta)), Real(sin(theta))}; }

Cx cx_pow(const Cx& a, unsigned long k) {
    Cx r{Real(1), Real(0)};
    Cx b = a;
    while (k) {
        if (k & 1) r = r * b;
        k >>= 1;
        if (k) b = b * b;
    }
    return r;
}

Real wrap_2pi(const Real& x) {
    Real tp = 2 * real_pi();
    Real r = x - tp * floor(x / tp);
    if (r >= tp) r -= tp;
    if (r < 0) r += tp;
    return r;
}

Real wrap_pm_pi(const Real& x) {
    Real pi = real_pi();
    Real r = wrap_2pi(x);
    if (r > pi) r -= 2 * pi;
    return r;
}

}  // namespace isingdyn
