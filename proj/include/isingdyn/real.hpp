#pragma once

#include <boost/multiprecision/mpfr.hpp>
#include <gmpxx.h>

#include <string>

namespace isingdyn {

using Real = boost::multiprecision::mpfr_float;

// Working precision in bits; ISINGDYN_PREC_BITS overrides the 256-bit default.
unsigned default_precision_bits();

// Sets the thread's working precision for Real and restores it on exit.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_digits_;
};

unsigned current_precision_bits();

Real to_real(const mpq_class& q);
Real to_real(const mpz_class& z);
// Exact dyadic value of x.
mpq_class to_rational(const Real& x);
Real real_pi();
// 2^-bits relative to the current precision, used as a rounding slack.
Real ulp_slack();
double to_double(const Real& x);
std::string to_string(const Real& x, int digits = 30);

struct Cx {
    Real re;
    Real im;
};

Cx operator+(const Cx& a, const Cx& b);
Cx operator-(const Cx& a, const Cx& b);
Cx operator*(const Cx& a, const Cx& b);
Cx operator/(const Cx& a, const Cx& b);
Cx cx_conj(const Cx& a);
Real cx_abs(const Cx& a);
Real cx_norm(const Cx& a);
Real cx_arg(const Cx& a);
Cx cx_expi(const Real& theta);
Cx cx_pow(const Cx& a, unsigned long k);

// Reduces x into [0, 2pi).
Real wrap_2pi(const Real& x);
// Reduces x into (-pi, pi].
Real wrap_pm_pi(const Real& x);

}  // namespace isingdyn
