#pragma once

#include "isingdyn/real.hpp"

#include <gmpxx.h>

#include <optional>
#include <string>

namespace isingdyn {

struct GaussianRational {
    mpq_class re;
    mpq_class im;

    GaussianRational() : re(0), im(0) {}
    GaussianRational(long v) : re(v), im(0) {}
    GaussianRational(mpq_class r) : re(std::move(r)), im(0) { re.canonicalize(); }
    GaussianRational(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {
        re.canonicalize();
        im.canonicalize();
    }

    static GaussianRational i_unit() { return {0, 1}; }

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_real() const { return sgn(im) == 0; }
    GaussianRational conj() const { return {re, -im}; }
    mpq_class norm() const { return re * re + im * im; }
    Cx to_cx() const { return {to_real(re), to_real(im)}; }
    // Total bits in the four numerator/denominator integers.
    std::size_t bit_size() const;
    std::string str() const;
};

GaussianRational operator+(const GaussianRational& a, const GaussianRational& b);
GaussianRational operator-(const GaussianRational& a, const GaussianRational& b);
GaussianRational operator-(const GaussianRational& a);
GaussianRational operator*(const GaussianRational& a, const GaussianRational& b);
GaussianRational operator/(const GaussianRational& a, const GaussianRational& b);
GaussianRational& operator+=(GaussianRational& a, const GaussianRational& b);
GaussianRational& operator-=(GaussianRational& a, const GaussianRational& b);
GaussianRational& operator*=(GaussianRational& a, const GaussianRational& b);
bool operator==(const GaussianRational& a, const GaussianRational& b);
inline bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }
GaussianRational pow(const GaussianRational& a, unsigned long k);
GaussianRational mul_rational(const GaussianRational& a, const mpq_class& s);

// Exact square root in Q(i) when one exists.
std::optional<GaussianRational> exact_sqrt(const GaussianRational& a);
std::optional<mpq_class> exact_sqrt(const mpq_class& a);

class UnitPoint {
public:
    UnitPoint() : v_(1) {}
    explicit UnitPoint(GaussianRational v);
    UnitPoint(mpq_class re, mpq_class im) : UnitPoint(GaussianRational(std::move(re), std::move(im))) {}

    static UnitPoint one() { return UnitPoint(); }
    static UnitPoint i_unit() { return UnitPoint(GaussianRational(0, 1)); }
    static UnitPoint minus_one() { return UnitPoint(GaussianRational(-1)); }

    const GaussianRational& value() const { return v_; }
    const mpq_class& re() const { return v_.re; }
    const mpq_class& im() const { return v_.im; }
    UnitPoint conj() const { return UnitPoint(v_.conj(), Unchecked{}); }
    Cx to_cx() const { return v_.to_cx(); }
    std::string str() const { return v_.str(); }

    friend UnitPoint operator*(const UnitPoint& a, const UnitPoint& b) {
        return UnitPoint(a.v_ * b.v_, Unchecked{});
    }
    friend bool operator==(const UnitPoint& a, const UnitPoint& b) { return a.v_ == b.v_; }
    friend bool operator!=(const UnitPoint& a, const UnitPoint& b) { return !(a == b); }

private:
    struct Unchecked {};
    UnitPoint(GaussianRational v, Unchecked) : v_(std::move(v)) {}
    GaussianRational v_;
};

// An angle in radians: optional exact forms plus a float with an error bound.
struct Angle {
    Real value;
    Real err;
    std::optional<mpq_class> rational;     // exact value in radians
    std::optional<mpq_class> pi_multiple;  // exact value as a multiple of pi

    static Angle exact(const mpq_class& radians);
    static Angle pi_times(const mpq_class& q);
    static Angle approx(const Real& value, const Real& err);

    bool is_exact() const { return rational.has_value() || pi_multiple.has_value(); }
    // Lower and upper bounds of the true value.
    Real lo() const { return value - err; }
    Real hi() const { return value + err; }
};

Angle operator+(const Angle& a, const Angle& b);
Angle operator-(const Angle& a, const Angle& b);
Angle operator-(const Angle& a);
Angle scale(const Angle& a, const mpq_class& s);
// Argument in [0, 2pi).
Angle arg_of(const UnitPoint& z);
// Reduces into [0, 2pi), keeping exact forms where possible.
Angle wrap(const Angle& a);

// Counterclockwise angular position of v relative to u, compared exactly.
// Returns true iff the ccw angle from 1 to u is smaller than that to v.
bool ccw_less(const GaussianRational& u, const GaussianRational& v);

struct ArcEnd {
    std::optional<UnitPoint> point;
    Angle angle;  // in [0, 2pi)

    static ArcEnd at(const UnitPoint& p);
    static ArcEnd at(const Angle& a);
};

struct CircularArc {
    ArcEnd start;
    ArcEnd end;
    bool start_closed = true;
    bool end_closed = true;
    bool full = false;

    static CircularArc closed(const UnitPoint& a, const UnitPoint& b);
    static CircularArc open(const UnitPoint& a, const UnitPoint& b);
    static CircularArc between(const ArcEnd& a, const ArcEnd& b, bool start_closed, bool end_closed);
    static CircularArc full_circle();
};

// Throws Indeterminate when an angle-only endpoint is within error of z.
bool arc_contains(const CircularArc& arc, const UnitPoint& z);
Angle arc_length(const CircularArc& arc);

struct CirclePointResult {
    UnitPoint point;
    mpq_class r;          // half-angle tangent parameter, before any half-turn
    bool half_turned;     // point was negated
    Angle theta_hat;      // argument of point in (-pi, pi]
};

CirclePointResult rational_circle_point_ex(const Angle& theta, const mpq_class& eps);
UnitPoint rational_circle_point(const Angle& theta, const mpq_class& eps);
// Unit point (1 - r^2, 2r) / (1 + r^2).
UnitPoint circle_point_from_tan(const mpq_class& r);

// Continued-fraction convergent p/q of x with |x - p/q| <= tol.
mpq_class rational_within(const Real& x, const Real& tol);

std::optional<mpq_class> continued_fraction_round(const mpq_class& alpha, const mpz_class& K);

// Parsers for CLI literals.
mpq_class parse_rational(const std::string& s);
GaussianRational parse_gaussian(const std::string& s);
Angle parse_angle(const std::string& s);
std::string rational_str(const mpq_class& q);
// n/d in canonical form.
mpq_class ratio(long n, long d);

}  // namespace isingdyn
