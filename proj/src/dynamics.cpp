#include "isingdyn/dynamics.hpp"

#include "isingdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace isingdyn {

namespace {

void check_b(const mpq_class& b) {
    require(sgn(b) > 0 && b < 1, ErrorKind::PreconditionViolated, "b must lie in (0,1)");
}

Real angle_of(const UnitPoint& z) { return atan2(to_real(z.im()), to_real(z.re())); }

Cx cx_sqrt(const Cx& a) {
    Real r = cx_abs(a);
    Real u = sqrt((r + a.re) / 2);
    Real v = sqrt((r - a.re) / 2);
    if (a.im < 0) v = -v;
    return {u, v};
}

Stability classify(const Real& mult, const Real& tol) {
    if (abs(mult - 1) <= tol) return Stability::Parabolic;
    return mult < 1 ? Stability::Attracting : Stability::Repelling;
}

Stability classify_exact(const mpq_class& mult) {
    int c = cmp(mult, 1);
    if (c == 0) return Stability::Parabolic;
    return c < 0 ? Stability::Attracting : Stability::Repelling;
}

std::optional<UnitPoint> snap_exact(const MapParams& p, const Cx& z, const Real& tol) {
    static const UnitPoint candidates[] = {UnitPoint::one(), UnitPoint::minus_one(), UnitPoint::i_unit(),
                                           UnitPoint::i_unit().conj()};
    for (const auto& c : candidates) {
        if (cx_abs(z - c.to_cx()) > tol) continue;
        if (apply_map(p, c) == c) return c;
    }
    return std::nullopt;
}

}  // namespace

MapParams::MapParams(UnitPoint lambda_, unsigned k_, mpq_class b_)
    : lambda(std::move(lambda_)), k(k_), b(std::move(b_)) {
    require(k >= 1, ErrorKind::PreconditionViolated, "k must be at least 1");
    check_b(b);
}

GaussianRational apply_map_exact(const GaussianRational& lambda, unsigned k, const mpq_class& b,
                                 const GaussianRational& z) {
    GaussianRational num = z + GaussianRational(b);
    GaussianRational den = mul_rational(z, b) + GaussianRational(1);
    require(!den.is_zero(), ErrorKind::ZeroDenominator, "bz + 1 = 0");
    return lambda * pow(num / den, k);
}

UnitPoint apply_map(const MapParams& p, const UnitPoint& z) {
    return UnitPoint(apply_map_exact(p.lambda.value(), p.k, p.b, z.value()));
}

mpq_class derivative_magnitude(unsigned k, const mpq_class& b, const UnitPoint& z) {
    mpq_class d = b * b + 2 * b * z.re() + 1;
    return mpq_class(k * (1 - b * b) / d);
}

Real derivative_magnitude(unsigned k, const mpq_class& b, const Cx& z) {
    Real br = to_real(b);
    return Real(k) * (1 - br * br) / (br * br + 2 * br * z.re + 1);
}

Real mobius_angle(const Real& phi, const Real& c) {
    Real pi = real_pi(), tp = 2 * pi;
    Real n = floor((phi + pi) / tp);
    Real phi0 = phi - tp * n;
    return 2 * atan(c * tan(phi0 / 2)) + tp * n;
}

AngleMap::AngleMap(const Real& arg_lambda, unsigned k, const mpq_class& b) : arg_lambda_(arg_lambda), k_(k) {
    check_b(b);
    c_ = to_real(mpq_class((1 - b) / (1 + b)));
}

AngleMap::AngleMap(const UnitPoint& lambda, unsigned k, const mpq_class& b)
    : AngleMap(angle_of(lambda), k, b) {}

Real AngleMap::operator()(const Real& phi) const { return arg_lambda_ + Real(k_) * mobius_angle(phi, c_); }

Real AngleMap::derivative(const Real& phi) const {
    Real c = cos(phi / 2), s = sin(phi / 2);
    return Real(k_) * c_ / (c * c + c_ * c_ * s * s);
}

Real AngleMap::inverse(const Real& psi) const {
    return mobius_angle((psi - arg_lambda_) / Real(k_), Real(1 / c_));
}

const char* stability_name(Stability s) {
    switch (s) {
    case Stability::Attracting: return "attracting";
    case Stability::Parabolic: return "parabolic";
    case Stability::Repelling: return "repelling";
    }
    return "";
}

std::vector<FixedPoint> fixed_points_on_circle(const MapParams& p, const mpq_class& tol) {
    require(sgn(tol) > 0, ErrorKind::PreconditionViolated, "tol must be positive");
    Real rtol = to_real(tol);
    std::vector<FixedPoint> out;
    auto finish = [&](FixedPoint fp) {
        if (fp.exact) {
            fp.multiplier_exact = derivative_magnitude(p.k, p.b, *fp.exact);
            fp.multiplier = to_real(*fp.multiplier_exact);
            fp.stability = classify_exact(*fp.multiplier_exact);
            fp.point = fp.exact->to_cx();
            fp.angle = angle_of(*fp.exact);
            fp.residual = 0;
        } else {
            fp.multiplier = derivative_magnitude(p.k, p.b, fp.point);
            fp.stability = classify(fp.multiplier, rtol);
        }
        out.push_back(std::move(fp));
    };

    if (p.k == 1) {
        // b z^2 + (1 - lambda) z - lambda b = 0
        const GaussianRational& lam = p.lambda.value();
        GaussianRational one_m = GaussianRational(1) - lam;
        GaussianRational disc = one_m * one_m + mul_rational(lam, 4 * p.b * p.b);
        GaussianRational lam_m1 = lam - GaussianRational(1);
        GaussianRational inv2b(mpq_class(1 / (2 * p.b)));
        if (auto s = exact_sqrt(disc)) {
            std::vector<GaussianRational> roots{(lam_m1 + *s) * inv2b};
            if (!s->is_zero()) roots.push_back((lam_m1 - *s) * inv2b);
            for (auto& r : roots) {
                if (r.norm() != 1) continue;
                FixedPoint fp;
                fp.exact = UnitPoint(r);
                finish(std::move(fp));
            }
        } else {
            Cx sq = cx_sqrt(disc.to_cx());
            Cx base = lam_m1.to_cx();
            Real two_b = to_real(mpq_class(2 * p.b));
            for (int sgn_ : {1, -1}) {
                Cx r{Real((base.re + sgn_ * sq.re) / two_b), Real((base.im + sgn_ * sq.im) / two_b)};
                if (abs(cx_abs(r) - 1) > rtol) continue;
                FixedPoint fp;
                Real a = cx_arg(r);
                fp.angle = a;
                fp.point = cx_expi(a);
                Cx fz = lam.to_cx() * (fp.point + Cx{to_real(p.b), Real(0)}) /
                        (Cx{Real(to_real(p.b) * fp.point.re + 1), Real(to_real(p.b) * fp.point.im)});
                fp.residual = cx_abs(fz - fp.point);
                finish(std::move(fp));
            }
        }
        return out;
    }

    AngleMap F(p.lambda, p.k, p.b);
    Real pi = real_pi(), tp = 2 * pi;
    auto G = [&](const Real& phi) { return Real(F(phi) - phi); };
    std::vector<Real> breaks{-pi};
    mpq_class xc = (p.k * (1 - p.b * p.b) - p.b * p.b - 1) / (2 * p.b);
    if (xc > -1 && xc < 1) {
        Real phic = acos(to_real(xc));
        breaks.push_back(-phic);
        breaks.push_back(phic);
    }
    breaks.push_back(pi);
    std::vector<Real> roots;
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        Real u = breaks[s], v = breaks[s + 1];
        Real gu = G(u), gv = G(v);
        bool increasing = gv >= gu;
        Real lo = increasing ? gu : gv, hi = increasing ? gv : gu;
        Real jlo = ceil((lo - rtol) / tp), jhi = floor((hi + rtol) / tp);
        for (Real j = jlo; j <= jhi; j += 1) {
            Real level = j * tp;
            Real a = u, b = v;
            int it = 0;
            while (b - a > rtol / 4 && it < 4000) {
                Real m = (a + b) / 2;
                bool below = G(m) < level;
                if (below == increasing)
                    a = m;
                else
                    b = m;
                ++it;
            }
            require(it < 4000, ErrorKind::NoConvergence, "fixed-point bisection did not converge");
            roots.push_back((a + b) / 2);
        }
    }
    std::sort(roots.begin(), roots.end());
    std::vector<Real> uniq;
    for (const auto& r : roots) {
        Real w = wrap_pm_pi(r);
        bool dup = false;
        for (const auto& q : uniq) {
            Real d = abs(wrap_pm_pi(w - q));
            if (d <= rtol) dup = true;
        }
        if (!dup) uniq.push_back(w);
    }
    for (const auto& r : uniq) {
        FixedPoint fp;
        fp.angle = r;
        fp.point = cx_expi(r);
        Real g = G(r);
        fp.residual = abs(2 * sin(g / 2));
        fp.exact = snap_exact(p, fp.point, Real(rtol * 16));
        finish(std::move(fp));
    }
    return out;
}

std::optional<FixedPoint> attracting_fixed_point(const MapParams& p, const mpq_class& tol) {
    auto fps = fixed_points_on_circle(p, tol);
    std::optional<FixedPoint> best;
    for (auto& fp : fps) {
        if (fp.stability == Stability::Repelling) continue;
        if (!best || fp.multiplier < best->multiplier) best = fp;
    }
    return best;
}

ThresholdResult lambda_threshold(unsigned k, const mpq_class& b) {
    require(k >= 1, ErrorKind::PreconditionViolated, "k must be at least 1");
    check_b(b);
    ThresholdResult r;
    r.re_parabolic = (k * (1 - b * b) - b * b - 1) / (2 * b);
    mpq_class bound = ratio(k - 1, k + 1);
    r.err = 0;
    if (b <= bound) {
        r.exists = false;
        r.parabolic_point = {Real(1), Real(0)};
        r.lambda_k = {Real(1), Real(0)};
        r.arg_lambda_k = 0;
        if (b == bound) r.lambda_k_exact = GaussianRational(1);
        return r;
    }
    r.exists = true;
    mpq_class x = r.re_parabolic;
    auto y = exact_sqrt(mpq_class(1 - x * x));
    if (y) {
        GaussianRational z(x, *y);
        GaussianRational w = (mul_rational(z, b) + GaussianRational(1)) / (z + GaussianRational(b));
        GaussianRational lam = z * pow(w, k);
        r.lambda_k_exact = lam;
        r.parabolic_point = z.to_cx();
        r.lambda_k = lam.to_cx();
    } else {
        Real xr = to_real(x);
        Cx z{xr, Real(sqrt(1 - xr * xr))};
        Cx br{to_real(b), Real(0)};
        Cx one{Real(1), Real(0)};
        Cx w = (br * z + one) / (z + br);
        r.parabolic_point = z;
        r.lambda_k = z * cx_pow(w, k);
    }
    r.arg_lambda_k = cx_arg(r.lambda_k);
    r.err = ulp_slack() * Real(64 * (k + 1));
    return r;
}

bool in_chaotic_regime(unsigned k, const mpq_class& b, const UnitPoint& lambda) {
    check_b(b);
    mpq_class bound = ratio(k - 1, k + 1);
    if (b < bound) return true;
    if (b == bound) return lambda != UnitPoint::one();
    ThresholdResult t = lambda_threshold(k, b);
    if (t.lambda_k_exact) {
        UnitPoint lk(*t.lambda_k_exact);
        if (lambda == lk || lambda == lk.conj()) return false;
        return arc_contains(CircularArc::open(lk, lk.conj()), lambda);
    }
    Real pi = real_pi();
    Real th = wrap_2pi(angle_of(lambda));
    Real tol = t.err + ulp_slack() * 16;
    if (abs(th - t.arg_lambda_k) <= tol || abs(th - (2 * pi - t.arg_lambda_k)) <= tol)
        fail(ErrorKind::Indeterminate, "lambda within error of the threshold");
    return th > t.arg_lambda_k && th < 2 * pi - t.arg_lambda_k;
}

const char* mobius_kind_name(MobiusClass::Kind k) {
    switch (k) {
    case MobiusClass::Elliptic: return "elliptic";
    case MobiusClass::Parabolic: return "parabolic";
    case MobiusClass::Hyperbolic: return "hyperbolic";
    }
    return "";
}

MobiusClass mobius_classify(const UnitPoint& lambda, const mpq_class& b) {
    check_b(b);
    MobiusClass m;
    m.trace_sq = 2 * (lambda.re() + 1) / (1 - b * b);
    if (m.trace_sq < 4) {
        m.kind = MobiusClass::Elliptic;
        m.rotation_cos = m.trace_sq / 2 - 1;
    } else if (m.trace_sq == 4) {
        m.kind = MobiusClass::Parabolic;
    } else {
        m.kind = MobiusClass::Hyperbolic;
    }
    return m;
}

std::vector<CurvePoint> curve_points_known(long t) {
    if (t == 2) return {{0, 0}, {2, 4}, {2, -4}};
    return {{0, 0}};
}

bool is_rational_rotation(const UnitPoint& lambda, const mpq_class& b) {
    require(lambda != UnitPoint::one() && lambda != UnitPoint::minus_one(), ErrorKind::PreconditionViolated,
            "lambda must differ from +1 and -1");
    MobiusClass m = mobius_classify(lambda, b);
    require(m.kind == MobiusClass::Elliptic, ErrorKind::PreconditionViolated, "map is not elliptic");
    // A rational rotation forces t = 2(cos + 1) to be a rational algebraic integer.
    if (m.trace_sq.get_den() != 1) return false;
    long t = m.trace_sq.get_num().get_si();
    mpq_class X = t * (1 + b) / (1 - b);
    mpq_class Y = 2 * t * lambda.im() / ((1 - b) * (1 - b));
    mpq_class rhs = X * X * X - (t - 2) * t * X * X + t * t * X;
    require(Y * Y == rhs, ErrorKind::NoConvergence, "curve point identity failed");
    for (const auto& pt : curve_points_known(t))
        if (pt.x == X && pt.y == Y) return true;
    return false;
}

std::vector<CurvePoint> curve_points_bounded(long t, long height) {
    std::vector<CurvePoint> out;
    for (long e = 1; e * e <= height; ++e) {
        __int128 e2 = e * e, e4 = e2 * e2;
        for (long m = -height; m <= height; ++m) {
            if (std::gcd(std::labs(m), e) != 1) continue;
            __int128 mm = m;
            __int128 n = mm * mm * mm - (__int128)(t - 2) * t * mm * mm * e2 + (__int128)t * t * mm * e4;
            if (n < 0) continue;
            auto s = static_cast<__int128>(std::sqrt(static_cast<long double>(n)));
            while (s * s > n) --s;
            while ((s + 1) * (s + 1) <= n) ++s;
            if (s * s != n) continue;
            mpq_class x(m, e * e);
            x.canonicalize();
            mpz_class sz(static_cast<long>(s));
            mpq_class y(sz, mpz_class(e) * e * e);
            y.canonicalize();
            out.push_back({x, y});
            if (s != 0) out.push_back({x, -y});
        }
    }
    return out;
}

std::vector<OrbitPoint> orbit(const MapParams& p, const UnitPoint& z0, std::size_t n, const OrbitOptions& opt) {
    std::vector<OrbitPoint> out;
    out.reserve(n + 1);
    UnitPoint z = z0;
    std::size_t step = 0;
    auto push_exact = [&](const UnitPoint& w) {
        OrbitPoint op;
        op.step = step;
        op.exact = w;
        op.angle = angle_of(w);
        op.err = 0;
        op.deriv = to_real(derivative_magnitude(p.k, p.b, w));
        out.push_back(std::move(op));
    };
    push_exact(z);
    while (step < n) {
        bool exact_ok = opt.exact_only || step < opt.exact_steps;
        if (!exact_ok || z.value().bit_size() > opt.bit_budget) {
            if (opt.exact_only) fail(ErrorKind::BudgetExceeded, "exact orbit exceeded the bit budget");
            break;
        }
        z = apply_map(p, z);
        ++step;
        push_exact(z);
    }
    if (step == n) return out;
    PrecisionScope prec(opt.float_bits);
    AngleMap F(p.lambda, p.k, p.b);
    Real pi = real_pi();
    Real phi = angle_of(z);
    Real err = ulp_slack();
    Real kc_max = Real(p.k) * to_real(mpq_class((1 + p.b) / (1 - p.b)));
    while (step < n) {
        Real d = std::max(F.derivative(phi - err), F.derivative(phi + err));
        if (abs(abs(phi) - pi) <= err) d = kc_max;
        phi = wrap_pm_pi(F(phi));
        err = err * d + ulp_slack() * 8;
        ++step;
        OrbitPoint op;
        op.step = step;
        op.angle = phi;
        op.err = err;
        op.deriv = F.derivative(phi);
        out.push_back(std::move(op));
    }
    return out;
}

std::string orbit_csv(const std::vector<OrbitPoint>& pts) {
    std::ostringstream os;
    os << "step,re,im,arg,deriv_mag\n";
    for (const auto& p : pts) {
        Real re = cos(p.angle), im = sin(p.angle);
        os << p.step << ',' << to_string(re, 20) << ',' << to_string(im, 20) << ',' << to_string(p.angle, 20)
           << ',' << to_string(p.deriv, 20) << '\n';
    }
    return os.str();
}

ExpandingPoint find_expanding_point(const MapParams& p, const UnitPoint& z0, std::size_t budget) {
    require(p.lambda != UnitPoint::minus_one(), ErrorKind::PreconditionViolated, "lambda = -1 is excluded");
    require(in_chaotic_regime(p.k, p.b, p.lambda), ErrorKind::PreconditionViolated,
            "lambda is outside the chaotic regime");
    UnitPoint z = z0;
    std::size_t m = 0;
    const std::size_t exact_bits = 1 << 14;
    while (true) {
        mpq_class d = derivative_magnitude(p.k, p.b, z);
        if (d > 1) {
            ExpandingPoint e;
            e.m = m;
            e.exact = z;
            e.angle = angle_of(z);
            e.deriv = to_real(d);
            e.deriv_exact = d;
            return e;
        }
        if (m >= budget) fail(ErrorKind::BudgetExceeded, "no expanding point within budget");
        if (z.value().bit_size() > exact_bits) break;
        z = apply_map(p, z);
        ++m;
    }
    AngleMap F(p.lambda, p.k, p.b);
    Real phi = angle_of(z);
    Real err = ulp_slack();
    Real pi = real_pi();
    Real kc_max = Real(p.k) * to_real(mpq_class((1 + p.b) / (1 - p.b)));
    while (m < budget) {
        Real d = std::max(F.derivative(phi - err), F.derivative(phi + err));
        if (abs(abs(phi) - pi) <= err) d = kc_max;
        phi = wrap_pm_pi(F(phi));
        err = err * d + ulp_slack() * 8;
        ++m;
        require(err < Real(1e-20), ErrorKind::NoConvergence, "orbit error bound exhausted");
        Real lo = std::min({F.derivative(phi - err), F.derivative(phi + err), F.derivative(phi)});
        if (abs(phi) <= err) lo = F.derivative(Real(0));
        if (lo > 1) {
            ExpandingPoint e;
            e.m = m;
            e.angle = phi;
            e.deriv = F.derivative(phi);
            return e;
        }
    }
    fail(ErrorKind::BudgetExceeded, "no expanding point within budget");
}

}  // namespace isingdyn
