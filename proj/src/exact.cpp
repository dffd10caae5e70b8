#include "isingdyn/exact.hpp"

#include "isingdyn/errors.hpp"

#include <algorithm>
#include <cctype>

namespace isingdyn {

namespace {

std::size_t bits(const mpz_class& z) { return mpz_sizeinbase(z.get_mpz_t(), 2); }

Real angle_slack(const Real& v) {
    Real a = abs(v);
    return ulp_slack() * (a > 1 ? a : Real(1));
}

mpz_class real_floor(const Real& x) {
    mpz_class z;
    Real f = floor(x);
    mpfr_get_z(z.get_mpz_t(), f.backend().data(), MPFR_RNDD);
    return z;
}

std::string strip(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c)) && c != '*') out += c;
    return out;
}

}  // namespace

std::size_t GaussianRational::bit_size() const {
    return bits(re.get_num()) + bits(re.get_den()) + bits(im.get_num()) + bits(im.get_den());
}

std::string GaussianRational::str() const {
    if (sgn(im) == 0) return re.get_str();
    std::string imag;
    if (im == 1)
        imag = "i";
    else if (im == -1)
        imag = "-i";
    else
        imag = im.get_str() + "i";
    if (sgn(re) == 0) return imag;
    if (imag[0] != '-') imag = "+" + imag;
    return re.get_str() + imag;
}

GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) {
    return {a.re + b.re, a.im + b.im};
}
GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) {
    return {a.re - b.re, a.im - b.im};
}
GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
GaussianRational operator/(const GaussianRational& a, const GaussianRational& b) {
    mpq_class d = b.norm();
    require(sgn(d) != 0, ErrorKind::ZeroDenominator, "division by zero Gaussian rational");
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
GaussianRational& operator+=(GaussianRational& a, const GaussianRational& b) {
    a.re += b.re;
    a.im += b.im;
    return a;
}
GaussianRational& operator-=(GaussianRational& a, const GaussianRational& b) {
    a.re -= b.re;
    a.im -= b.im;
    return a;
}
GaussianRational& operator*=(GaussianRational& a, const GaussianRational& b) {
    a = a * b;
    return a;
}
bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re == b.re && a.im == b.im;
}

GaussianRational pow(const GaussianRational& a, unsigned long k) {
    GaussianRational r(1), b = a;
    while (k) {
        if (k & 1) r *= b;
        k >>= 1;
        if (k) b *= b;
    }
    return r;
}

GaussianRational mul_rational(const GaussianRational& a, const mpq_class& s) {
    return {a.re * s, a.im * s};
}

std::optional<mpq_class> exact_sqrt(const mpq_class& a) {
    if (sgn(a) < 0) return std::nullopt;
    if (!mpz_perfect_square_p(a.get_num_mpz_t()) || !mpz_perfect_square_p(a.get_den_mpz_t()))
        return std::nullopt;
    mpz_class n = sqrt(mpz_class(a.get_num())), d = sqrt(mpz_class(a.get_den()));
    return mpq_class(n, d);
}

std::optional<GaussianRational> exact_sqrt(const GaussianRational& a) {
    if (sgn(a.im) == 0) {
        if (sgn(a.re) >= 0) {
            auto s = exact_sqrt(a.re);
            if (s) return GaussianRational(*s);
            return std::nullopt;
        }
        auto s = exact_sqrt(mpq_class(-a.re));
        if (s) return GaussianRational(0, *s);
        return std::nullopt;
    }
    auto n = exact_sqrt(a.norm());
    if (!n) return std::nullopt;
    auto u = exact_sqrt(mpq_class((*n + a.re) / 2));
    auto v = exact_sqrt(mpq_class((*n - a.re) / 2));
    if (!u || !v) return std::nullopt;
    return GaussianRational(*u, sgn(a.im) > 0 ? *v : mpq_class(-*v));
}

UnitPoint::UnitPoint(GaussianRational v) : v_(std::move(v)) {
    require(v_.norm() == 1, ErrorKind::InvalidArgument, "not on the unit circle: " + v_.str());
}

Angle Angle::exact(const mpq_class& radians) {
    Angle a;
    a.value = to_real(radians);
    a.err = angle_slack(a.value);
    a.rational = radians;
    if (sgn(radians) == 0) {
        a.pi_multiple = mpq_class(0);
        a.err = 0;
    }
    return a;
}

Angle Angle::pi_times(const mpq_class& q) {
    Angle a;
    a.value = to_real(q) * real_pi();
    a.err = angle_slack(a.value);
    a.pi_multiple = q;
    if (sgn(q) == 0) {
        a.rational = mpq_class(0);
        a.err = 0;
    }
    return a;
}

Angle Angle::approx(const Real& value, const Real& err) {
    Angle a;
    a.value = value;
    a.err = abs(err) + angle_slack(value);
    return a;
}

Angle operator+(const Angle& a, const Angle& b) {
    Angle r;
    r.value = a.value + b.value;
    r.err = a.err + b.err + angle_slack(r.value);
    if (a.rational && b.rational) r.rational = *a.rational + *b.rational;
    if (a.pi_multiple && b.pi_multiple) r.pi_multiple = *a.pi_multiple + *b.pi_multiple;
    return r;
}

Angle operator-(const Angle& a) {
    Angle r = a;
    r.value = -a.value;
    if (r.rational) r.rational = -*r.rational;
    if (r.pi_multiple) r.pi_multiple = -*r.pi_multiple;
    return r;
}

Angle operator-(const Angle& a, const Angle& b) { return a + (-b); }

Angle scale(const Angle& a, const mpq_class& s) {
    Angle r;
    r.value = a.value * to_real(s);
    r.err = a.err * abs(to_real(s)) + angle_slack(r.value);
    if (a.rational) r.rational = *a.rational * s;
    if (a.pi_multiple) r.pi_multiple = *a.pi_multiple * s;
    return r;
}

Angle wrap(const Angle& a) {
    if (a.pi_multiple) {
        mpq_class q = *a.pi_multiple;
        mpz_class k, twice_den = 2 * q.get_den();
        mpz_fdiv_q(k.get_mpz_t(), q.get_num_mpz_t(), twice_den.get_mpz_t());
        return Angle::pi_times(q - mpq_class(2 * k));
    }
    Real tp = 2 * real_pi();
    if (a.lo() >= 0 && a.hi() < tp) return a;
    Angle r = Angle::approx(wrap_2pi(a.value), a.err);
    return r;
}

Angle arg_of(const UnitPoint& z) {
    const auto& v = z.value();
    if (sgn(v.im) == 0) return Angle::pi_times(sgn(v.re) > 0 ? 0 : 1);
    if (sgn(v.re) == 0) return Angle::pi_times(sgn(v.im) > 0 ? mpq_class(1, 2) : mpq_class(3, 2));
    Real a = wrap_2pi(atan2(to_real(v.im), to_real(v.re)));
    return Angle::approx(a, 8 * angle_slack(a));
}

bool ccw_less(const GaussianRational& u, const GaussianRational& v) {
    auto half = [](const GaussianRational& w) {
        return (sgn(w.im) > 0 || (sgn(w.im) == 0 && sgn(w.re) > 0)) ? 0 : 1;
    };
    int hu = half(u), hv = half(v);
    if (hu != hv) return hu < hv;
    mpq_class cross = u.re * v.im - u.im * v.re;
    return sgn(cross) > 0;
}

ArcEnd ArcEnd::at(const UnitPoint& p) { return {p, arg_of(p)}; }
ArcEnd ArcEnd::at(const Angle& a) { return {std::nullopt, wrap(a)}; }

CircularArc CircularArc::closed(const UnitPoint& a, const UnitPoint& b) {
    return between(ArcEnd::at(a), ArcEnd::at(b), true, true);
}
CircularArc CircularArc::open(const UnitPoint& a, const UnitPoint& b) {
    return between(ArcEnd::at(a), ArcEnd::at(b), false, false);
}
CircularArc CircularArc::between(const ArcEnd& a, const ArcEnd& b, bool sc, bool ec) {
    CircularArc arc;
    arc.start = a;
    arc.end = b;
    arc.start_closed = sc;
    arc.end_closed = ec;
    return arc;
}
CircularArc CircularArc::full_circle() {
    CircularArc arc = closed(UnitPoint::one(), UnitPoint::one());
    arc.full = true;
    return arc;
}

bool arc_contains(const CircularArc& arc, const UnitPoint& z) {
    if (arc.full) return true;
    if (arc.start.point && arc.end.point) {
        const UnitPoint& a = *arc.start.point;
        const UnitPoint& b = *arc.end.point;
        if (a == b) return z == a && arc.start_closed && arc.end_closed;
        if (z == a) return arc.start_closed;
        if (z == b) return arc.end_closed;
        GaussianRational w = z.value() * a.value().conj();
        GaussianRational e = b.value() * a.value().conj();
        return ccw_less(w, e);
    }
    if (arc.start.point && *arc.start.point == z) return arc.start_closed;
    if (arc.end.point && *arc.end.point == z) return arc.end_closed;
    Angle az = arg_of(z);
    Angle rel = wrap(az - arc.start.angle);
    Angle len = arc_length(arc);
    Real tp = 2 * real_pi();
    Real tol = rel.err + len.err;
    if (rel.value < tol || tp - rel.value < tol || abs(rel.value - len.value) < tol)
        fail(ErrorKind::Indeterminate, "point within angle error of an arc endpoint");
    return rel.value < len.value;
}

Angle arc_length(const CircularArc& arc) {
    if (arc.full) return Angle::pi_times(2);
    if (arc.start.point && arc.end.point && *arc.start.point == *arc.end.point) return Angle::pi_times(0);
    Angle d = arc.end.angle - arc.start.angle;
    if (d.pi_multiple && sgn(*d.pi_multiple) == 0) return Angle::pi_times(0);
    if (d.pi_multiple && sgn(*d.pi_multiple) < 0) return Angle::pi_times(*d.pi_multiple + 2);
    if (d.pi_multiple) return d;
    if (d.value < 0) return d + Angle::pi_times(2);
    return d;
}

UnitPoint circle_point_from_tan(const mpq_class& r) {
    mpq_class r2 = r * r;
    mpq_class d = 1 + r2;
    return UnitPoint(mpq_class((1 - r2) / d), mpq_class(2 * r / d));
}

mpq_class rational_within(const Real& x, const Real& tol) {
    mpz_class h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    Real xi = x;
    for (int it = 0; it < 100000; ++it) {
        mpz_class a = real_floor(xi);
        mpz_class h = a * h1 + h2;
        mpz_class k = a * k1 + k2;
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        mpq_class q(h, k);
        q.canonicalize();
        if (abs(x - to_real(q)) <= tol) return q;
        Real frac = xi - to_real(a);
        if (frac == 0) return q;
        xi = 1 / frac;
    }
    fail(ErrorKind::NoConvergence, "continued fraction did not reach tolerance");
}

CirclePointResult rational_circle_point_ex(const Angle& theta, const mpq_class& eps) {
    require(sgn(eps) > 0 && eps < 1, ErrorKind::PreconditionViolated, "eps must lie in (0,1)");
    if (theta.pi_multiple) {
        Angle w = wrap(theta);
        const mpq_class& q = *w.pi_multiple;
        if (q == 0) return {UnitPoint::one(), 0, false, Angle::pi_times(0)};
        if (q == mpq_class(1, 2)) return {UnitPoint::i_unit(), 1, false, Angle::pi_times(mpq_class(1, 2))};
        if (q == 1) return {UnitPoint::minus_one(), 0, true, Angle::pi_times(1)};
        if (q == mpq_class(3, 2))
            return {UnitPoint::i_unit().conj(), -1, false, Angle::pi_times(mpq_class(-1, 2))};
    }
    long need = static_cast<long>(mpz_sizeinbase(eps.get_den().get_mpz_t(), 2)) + 64;
    PrecisionScope prec(std::max<unsigned>(current_precision_bits(), static_cast<unsigned>(need)));
    Real e = to_real(eps);
    require(theta.err < e / 4, ErrorKind::PreconditionViolated, "angle error exceeds eps/4");
    Real pi = real_pi();
    Real v = wrap_pm_pi(theta.value);
    bool flip = abs(v) > pi / 2;
    if (flip) v = v > 0 ? Real(v - pi) : Real(v + pi);
    Real t = tan(v / 2);
    mpq_class r = rational_within(t, e / 8);
    UnitPoint p = circle_point_from_tan(r);
    Real th = 2 * atan(to_real(r));
    if (flip) {
        p = p * UnitPoint::minus_one();
        th = th > 0 ? Real(th - pi) : Real(th + pi);
    }
    return {p, r, flip, Angle::approx(th, 0)};
}

UnitPoint rational_circle_point(const Angle& theta, const mpq_class& eps) {
    return rational_circle_point_ex(theta, eps).point;
}

std::optional<mpq_class> continued_fraction_round(const mpq_class& alpha, const mpz_class& K) {
    require(K >= 1, ErrorKind::PreconditionViolated, "K must be positive");
    mpq_class bound(1, 2 * K * K);
    mpz_class num = alpha.get_num(), den = alpha.get_den();
    mpz_class h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    while (true) {
        mpz_class a;
        mpz_fdiv_q(a.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        mpz_class h = a * h1 + h2, k = a * k1 + k2;
        if (k > K) break;
        mpq_class c(h, k);
        c.canonicalize();
        if (abs(alpha - c) < bound) return c;
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        mpz_class rem = num - a * den;
        if (rem == 0) break;
        num = den;
        den = rem;
    }
    return std::nullopt;
}

mpq_class parse_rational(const std::string& text) {
    std::string s = strip(text);
    require(!s.empty(), ErrorKind::InvalidArgument, "empty number");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        mpq_class n = parse_rational(s.substr(0, slash));
        mpq_class d = parse_rational(s.substr(slash + 1));
        require(sgn(d) != 0, ErrorKind::InvalidArgument, "zero denominator in " + text);
        return n / d;
    }
    std::size_t pos = 0;
    bool neg = false;
    if (s[pos] == '+' || s[pos] == '-') neg = s[pos++] == '-';
    std::string digits;
    long frac_digits = 0;
    bool dot = false;
    for (; pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'); ++pos) {
        if (s[pos] == '.') {
            require(!dot, ErrorKind::InvalidArgument, "bad number " + text);
            dot = true;
        } else {
            digits += s[pos];
            if (dot) ++frac_digits;
        }
    }
    require(!digits.empty(), ErrorKind::InvalidArgument, "bad number " + text);
    long exp10 = -frac_digits;
    if (pos < s.size()) {
        require(s[pos] == 'e' || s[pos] == 'E', ErrorKind::InvalidArgument, "bad number " + text);
        std::string ex = s.substr(pos + 1);
        require(!ex.empty(), ErrorKind::InvalidArgument, "bad exponent in " + text);
        std::size_t used = 0;
        long e = 0;
        try {
            e = std::stol(ex, &used);
        } catch (...) {
            fail(ErrorKind::InvalidArgument, "bad exponent in " + text);
        }
        require(used == ex.size(), ErrorKind::InvalidArgument, "bad exponent in " + text);
        exp10 += e;
    }
    mpq_class q{mpz_class(digits, 10)};
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    if (exp10 >= 0)
        q *= p10;
    else
        q /= p10;
    q.canonicalize();
    return neg ? mpq_class(-q) : q;
}

GaussianRational parse_gaussian(const std::string& text) {
    std::string s = strip(text);
    require(!s.empty(), ErrorKind::InvalidArgument, "empty complex literal");
    if (s.back() != 'i') return GaussianRational(parse_rational(s));
    s.pop_back();
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    std::string re_part = split == std::string::npos ? "" : s.substr(0, split);
    std::string im_part = split == std::string::npos ? s : s.substr(split);
    mpq_class im;
    if (im_part.empty() || im_part == "+")
        im = 1;
    else if (im_part == "-")
        im = -1;
    else
        im = parse_rational(im_part);
    mpq_class re = re_part.empty() ? mpq_class(0) : parse_rational(re_part);
    return {re, im};
}

Angle parse_angle(const std::string& text) {
    std::string s = strip(text);
    auto p = s.find("pi");
    if (p == std::string::npos) return Angle::exact(parse_rational(s));
    std::string coef = s.substr(0, p), rest = s.substr(p + 2);
    mpq_class c;
    if (coef.empty() || coef == "+")
        c = 1;
    else if (coef == "-")
        c = -1;
    else
        c = parse_rational(coef);
    if (!rest.empty()) {
        require(rest[0] == '/', ErrorKind::InvalidArgument, "bad angle " + text);
        c /= parse_rational(rest.substr(1));
    }
    return Angle::pi_times(c);
}

std::string rational_str(const mpq_class& q) { return q.get_str(); }

mpq_class ratio(long n, long d) {
    require(d != 0, ErrorKind::ZeroDenominator, "zero denominator");
    mpq_class q(n, d);
    q.canonicalize();
    return q;
}

}  // namespace isingdyn
