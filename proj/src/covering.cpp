#include "isingdyn/dynamics.hpp"
#include "isingdyn/errors.hpp"

#include <algorithm>
#include <sstream>

namespace isingdyn {

namespace {

Real invert_by_bisection(const std::function<Real(const Real&)>& f, const Real& lo, const Real& hi,
                         const Real& y) {
    Real a = lo, b = hi;
    Real eps = ulp_slack() * (abs(hi) + abs(lo) + 1);
    for (int it = 0; it < 2000 && b - a > eps; ++it) {
        Real m = (a + b) / 2;
        if (f(m) < y)
            a = m;
        else
            b = m;
    }
    return (a + b) / 2;
}

std::string fmt(const Real& x) { return to_string(x, 12); }

}  // namespace

CoverResult cover_and_contract(const std::vector<IntervalMap>& maps, const Real& a_lo, const Real& a_hi,
                               const Real& j_lo, const Real& j_hi, const CoverOptions& opt) {
    require(!maps.empty(), ErrorKind::PreconditionViolated, "no maps");
    require(a_lo < a_hi, ErrorKind::PreconditionViolated, "empty domain");
    require(j_lo < j_hi, ErrorKind::PreconditionViolated, "empty target interval");
    const Real len = a_hi - a_lo;
    const Real tol = ulp_slack() * (abs(a_lo) + abs(a_hi) + 1) * 1024;
    std::size_t n = maps.size();

    auto inv = [&](std::size_t m, const Real& y) {
        if (maps[m].inverse) return maps[m].inverse(y);
        return invert_by_bisection(maps[m].f, a_lo, a_hi, y);
    };

    std::vector<Real> ilo(n), ihi(n);
    for (std::size_t m = 0; m < n; ++m) {
        ilo[m] = maps[m].f(a_lo);
        ihi[m] = maps[m].f(a_hi);
        if (ilo[m] < a_lo - tol || ihi[m] > a_hi + tol || ihi[m] <= ilo[m])
            fail(ErrorKind::CoverViolated, "map " + std::to_string(m) + " does not send the domain into itself");
        Real h = len / Real(opt.grid) / 1000;
        for (std::size_t g = 1; g < opt.grid; ++g) {
            Real x = a_lo + len * Real(g) / Real(opt.grid);
            Real d = (maps[m].f(x + h) - maps[m].f(x - h)) / (2 * h);
            if (d <= 0 || d >= 1)
                fail(ErrorKind::CoverViolated, "map " + std::to_string(m) + " is not a contraction at " + fmt(x));
        }
    }
    {
        std::vector<std::size_t> order(n);
        for (std::size_t m = 0; m < n; ++m) order[m] = m;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ilo[a] < ilo[b]; });
        Real reach = a_lo;
        for (auto m : order) {
            if (ilo[m] > reach + tol) break;
            reach = std::max(reach, ihi[m]);
        }
        if (reach < a_hi - tol) fail(ErrorKind::CoverViolated, "images do not cover the domain");
    }

    CoverResult res;
    if (j_lo <= a_lo && a_hi <= j_hi) {
        res.image_lo = a_lo;
        res.image_hi = a_hi;
        res.verified = true;
        return res;
    }
    std::size_t fix_lo = 0, fix_hi = 0;
    for (std::size_t m = 1; m < n; ++m) {
        if (abs(ilo[m] - a_lo) < abs(ilo[fix_lo] - a_lo)) fix_lo = m;
        if (abs(ihi[m] - a_hi) < abs(ihi[fix_hi] - a_hi)) fix_hi = m;
    }

    // Every composition lands in the hull of the images, so J only matters there.
    Real hull_lo = *std::min_element(ilo.begin(), ilo.end()), hull_hi = *std::max_element(ihi.begin(), ihi.end());
    auto clamp = [&](Real& l, Real& h) {
        l = std::max(l, hull_lo);
        h = std::min(h, hull_hi);
    };
    Real jl = j_lo, jh = j_hi;
    clamp(jl, jh);
    std::vector<std::size_t> seq;
    res.pullback_lengths.push_back(jh - jl);
    bool done = false;
    for (std::size_t step = 0; !done; ++step) {
        if (step > opt.budget)
            fail(ErrorKind::BudgetExceeded, "pull-back did not escape; last length " + fmt(jh - jl));
        std::optional<std::size_t> best;
        Real best_room;
        for (std::size_t m = 0; m < n; ++m) {
            if (ilo[m] <= jl && jh <= ihi[m]) {
                Real room = std::min(jl - ilo[m], ihi[m] - jh);
                if (!best || room > best_room) {
                    best = m;
                    best_room = room;
                }
            }
        }
        if (best) {
            seq.push_back(*best);
            Real nl = inv(*best, jl), nh = inv(*best, jh);
            jl = nl;
            jh = nh;
            clamp(jl, jh);
            res.pullback_lengths.push_back(jh - jl);
            continue;
        }
        // Escaped every image: J contains an image endpoint strictly inside.
        for (std::size_t m = 0; m < n && !done; ++m) {
            if (jl + tol < ilo[m] && ilo[m] < jh) {
                seq.push_back(m);
                if (ihi[m] < jh) {
                    done = true;
                    break;
                }
                Real a = inv(m, jh);
                Real x = a_hi;
                std::size_t it = 0;
                while (x >= a - tol) {
                    if (++it > opt.budget) fail(ErrorKind::BudgetExceeded, "endpoint iteration too slow");
                    x = maps[fix_lo].f(x);
                    seq.push_back(fix_lo);
                }
                done = true;
            } else if (jl < ihi[m] && ihi[m] + tol < jh) {
                seq.push_back(m);
                if (jl < ilo[m]) {
                    done = true;
                    break;
                }
                Real a = inv(m, jl);
                Real x = a_lo;
                std::size_t it = 0;
                while (x <= a + tol) {
                    if (++it > opt.budget) fail(ErrorKind::BudgetExceeded, "endpoint iteration too slow");
                    x = maps[fix_hi].f(x);
                    seq.push_back(fix_hi);
                }
                done = true;
            }
        }
        if (!done) fail(ErrorKind::CoverViolated, "target escaped all images without containing an endpoint");
    }
    Real lo = a_lo, hi = a_hi;
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
        lo = maps[*it].f(lo);
        hi = maps[*it].f(hi);
    }
    res.indices = std::move(seq);
    res.image_lo = lo;
    res.image_hi = hi;
    res.verified = j_lo < lo && hi < j_hi;
    if (!res.verified) fail(ErrorKind::NoConvergence, "composed image misses the target after rounding");
    return res;
}

const char* covering_lemma_name(CoveringLemma l) {
    switch (l) {
    case CoveringLemma::EasyOdd: return "easy-odd";
    case CoveringLemma::EasyEven: return "easy-even";
    case CoveringLemma::ThreeMaps: return "three-maps";
    case CoveringLemma::Remaining: return "remaining";
    }
    return "";
}

std::vector<IntervalMap> CoveringCertificate::interval_maps() const {
    std::vector<IntervalMap> out;
    for (std::size_t m = 0; m < degrees.size(); ++m) {
        AngleMap F(parameters[m], degrees[m], b);
        Real shift = shifts[m];
        out.push_back({[F, shift](const Real& x) { return Real(F(x) - shift); },
                       [F, shift](const Real& y) { return F.inverse(y + shift); }});
    }
    return out;
}

namespace {

FixedPoint fixed_point_or_fail(const UnitPoint& xi, unsigned k, const mpq_class& b, const mpq_class& tol) {
    auto fp = attracting_fixed_point(MapParams(xi, k, b), tol);
    if (!fp) fail(ErrorKind::HypothesisFailed, "no attracting fixed point for degree " + std::to_string(k));
    return *fp;
}

void check(bool cond, CoveringCertificate& cert, const std::string& what) {
    if (!cond) fail(ErrorKind::HypothesisFailed, what);
    cert.hypotheses.push_back(what);
}

// Upper half-plane representative; conjugation mirrors the whole picture.
UnitPoint upper(const UnitPoint& z) { return sgn(z.im()) < 0 ? z.conj() : z; }

void measure(CoveringCertificate& cert, const Real& a0, const Real& a1, const CoveringOptions& opt) {
    Real pi = real_pi(), tp = 2 * pi;
    Real tol = to_real(opt.tol);
    cert.arc_start = a0;
    cert.arc_end = a1;
    cert.arc_length = a1 - a0;
    cert.grid = opt.grid;
    bool inside = true;
    for (std::size_t m = 0; m < cert.degrees.size(); ++m) {
        AngleMap F(cert.parameters[m], cert.degrees[m], cert.b);
        Real s = F(a0), e = F(a1);
        Real shift = tp * floor((s - a0 + pi) / tp);
        cert.shifts.push_back(shift);
        cert.image_start.push_back(s - shift);
        cert.image_end.push_back(e - shift);
        cert.image_lengths.push_back(e - s);
        Real dmax = 0;
        for (std::size_t g = 0; g <= opt.grid; ++g) {
            Real x = a0 + cert.arc_length * Real(g) / Real(opt.grid);
            dmax = std::max(dmax, F.derivative(x));
        }
        cert.max_contraction.push_back(dmax);
        if (cert.image_start.back() < a0 - tol || cert.image_end.back() > a1 + tol) inside = false;
    }
    std::vector<std::size_t> order(cert.degrees.size());
    for (std::size_t m = 0; m < order.size(); ++m) order[m] = m;
    std::sort(order.begin(), order.end(),
              [&](auto x, auto y) { return cert.image_start[x] < cert.image_start[y]; });
    Real reach = a0;
    for (auto m : order) {
        if (cert.image_start[m] > reach + tol) break;
        reach = std::max(reach, cert.image_end[m]);
    }
    cert.covers = inside && reach >= a1 - tol;
}

Real lifted_end(const Real& a0, const Real& angle) { return a0 + wrap_2pi(angle - a0); }

}  // namespace

CoveringCertificate verify_easy_odd(const UnitPoint& xi_in, unsigned k, const mpq_class& b,
                                    const CoveringOptions& opt) {
    CoveringCertificate cert;
    cert.lemma = CoveringLemma::EasyOdd;
    cert.b = b;
    check(k >= 1, cert, "k >= 1");
    check(b >= ratio(k, k + 2) && b < 1, cert, "b in [k/(k+2), 1)");
    check(xi_in != UnitPoint::one(), cert, "xi != 1");
    UnitPoint xi = upper(xi_in);
    check(!in_chaotic_regime(k + 1, b, xi), cert, "xi in Arc[conj(lambda_{k+1}), lambda_{k+1}]");
    FixedPoint rk = fixed_point_or_fail(xi, k, b, opt.tol);
    FixedPoint rk1 = fixed_point_or_fail(xi, k + 1, b, opt.tol);
    Real d = rk.multiplier * Real(2 * k + 1) / Real(k);
    check(d >= 1 - to_real(opt.tol), cert, "|f'_{2k+1}(R_k(xi))| >= 1");
    cert.degrees = {k, k + 1};
    cert.parameters = {xi, xi};
    Real a0 = rk.angle, a1 = lifted_end(a0, rk1.angle);
    measure(cert, a0, a1, opt);
    bool sum = cert.image_lengths[0] + cert.image_lengths[1] > cert.arc_length;
    cert.holds = cert.covers && sum;
    cert.verdict = cert.holds ? "images of f_k and f_{k+1} cover A" : "covering inequality fails";
    return cert;
}

CoveringCertificate verify_easy_even(const UnitPoint& xi1_in, const UnitPoint& xi2_in, unsigned k,
                                     const mpq_class& b, const CoveringOptions& opt) {
    CoveringCertificate cert;
    cert.lemma = CoveringLemma::EasyEven;
    cert.b = b;
    if (xi1_in == xi2_in) {
        cert.degrees = {k, k};
        cert.parameters = {xi1_in, xi2_in};
        cert.arc_start = cert.arc_end = cert.arc_length = 0;
        cert.covers = cert.holds = true;
        cert.verdict = "degenerate arc";
        return cert;
    }
    check(k >= 1, cert, "k >= 1");
    check(b >= ratio(k - 1, k + 1) && b < 1, cert, "b in [(k-1)/(k+1), 1)");
    check(sgn(xi1_in.im()) != 0 && sgn(xi1_in.im()) == sgn(xi2_in.im()), cert, "xi1, xi2 in the same open half-plane");
    UnitPoint xi1 = upper(xi1_in), xi2 = upper(xi2_in);
    if (!ccw_less(xi1.value(), xi2.value())) std::swap(xi1, xi2);
    check(!in_chaotic_regime(k, b, xi1) && !in_chaotic_regime(k, b, xi2), cert,
          "xi_i in Arc[conj(lambda_k), lambda_k]");
    FixedPoint r1 = fixed_point_or_fail(xi1, k, b, opt.tol);
    FixedPoint r2 = fixed_point_or_fail(xi2, k, b, opt.tol);
    check(r1.multiplier * 2 >= 1 - to_real(opt.tol) && r2.multiplier * 2 >= 1 - to_real(opt.tol), cert,
          "|f'_{2k}(R_k(xi_i))| >= 1");
    cert.degrees = {k, k};
    cert.parameters = {xi1, xi2};
    Real a0 = r1.angle, a1 = lifted_end(a0, r2.angle);
    measure(cert, a0, a1, opt);
    bool halves = true;
    for (const auto& l : cert.image_lengths)
        if (!(l > cert.arc_length / 2 && l < cert.arc_length)) halves = false;
    cert.holds = cert.covers && halves;
    cert.verdict = cert.holds ? "both images exceed half of A and cover it" : "covering inequality fails";
    return cert;
}

CoveringCertificate verify_three_maps(const UnitPoint& xi_in, unsigned k, const mpq_class& b, unsigned p,
                                      const CoveringOptions& opt) {
    CoveringCertificate cert;
    cert.lemma = CoveringLemma::ThreeMaps;
    cert.b = b;
    check(k >= 5, cert, "k >= 5");
    check(b > ratio(k - 1, k + 1) && b < 1, cert, "b in ((k-1)/(k+1), 1)");
    check(xi_in != UnitPoint::one(), cert, "xi != 1");
    UnitPoint xi = upper(xi_in);
    check(!in_chaotic_regime(k, b, xi), cert, "xi in Arc[conj(lambda_k), lambda_k]");
    check(2 * k <= p && p <= 3 * k - 5, cert, "2k <= p <= 3k-5");
    check(derivative_magnitude(p, b, xi) >= 1, cert, "|f'_p(xi)| >= 1");
    FixedPoint r2 = fixed_point_or_fail(xi, k - 2, b, opt.tol);
    FixedPoint rk = fixed_point_or_fail(xi, k, b, opt.tol);
    cert.degrees = {k - 2, k - 1, k};
    cert.parameters = {xi, xi, xi};
    Real a0 = r2.angle, a1 = lifted_end(a0, rk.angle);
    measure(cert, a0, a1, opt);
    mpq_class bound = 1 - ratio(p - k + 2, p) * ratio(p - 2 * k + 1, k);
    bool second = to_rational(rk.multiplier) > bound;
    cert.holds = cert.covers || second;
    std::ostringstream os;
    os << (cert.covers ? "(i) three images cover A1 u A2" : "(i) fails") << "; "
       << (second ? "(ii) holds" : "(ii) fails") << ": |f'_k(R_k)| = " << fmt(rk.multiplier) << " vs "
       << bound.get_str();
    cert.verdict = os.str();
    return cert;
}

CoveringCertificate verify_remaining(const UnitPoint& xi_in, unsigned m, const mpq_class& b,
                                     const CoveringOptions& opt) {
    CoveringCertificate cert;
    cert.lemma = CoveringLemma::Remaining;
    cert.b = b;
    check(m >= 8, cert, "m >= 8");
    check(b > ratio(m - 1, m + 1) && b < 1, cert, "b in ((m-1)/(m+1), 1)");
    check(xi_in != UnitPoint::one(), cert, "xi != 1");
    UnitPoint xi = upper(xi_in);
    check(!in_chaotic_regime(m, b, xi), cert, "xi in Arc[conj(lambda_m), lambda_m]");
    bool case_a = derivative_magnitude(2 * m, b, xi) >= 1;
    bool case_b = m >= 9 && derivative_magnitude(2 * m + 1, b, xi) >= 1;
    check(case_a || case_b, cert, case_a ? "|f'_{2m}(xi)| >= 1" : "|f'_{2m+1}(xi)| >= 1");
    FixedPoint r3 = fixed_point_or_fail(xi, m - 3, b, opt.tol);
    FixedPoint r1 = fixed_point_or_fail(xi, m - 1, b, opt.tol);
    cert.degrees = {m - 3, m - 2, m - 1};
    cert.parameters = {xi, xi, xi};
    Real a0 = r3.angle, a1 = lifted_end(a0, r1.angle);
    measure(cert, a0, a1, opt);
    if (cert.covers) {
        cert.holds = true;
        cert.verdict = "f_{m-3}, f_{m-2}, f_{m-1} cover Arc[R_{m-3}, R_{m-1}]";
        return cert;
    }
    FixedPoint rm = fixed_point_or_fail(xi, m, b, opt.tol);
    CoveringCertificate pair;
    pair.lemma = CoveringLemma::Remaining;
    pair.b = b;
    pair.hypotheses = cert.hypotheses;
    pair.degrees = {m - 1, m};
    pair.parameters = {xi, xi};
    Real p0 = r1.angle, p1 = lifted_end(p0, rm.angle);
    measure(pair, p0, p1, opt);
    bool sum = pair.image_lengths[0] + pair.image_lengths[1] >= pair.arc_length;
    pair.holds = pair.covers && sum;
    pair.verdict = pair.holds ? "f_{m-1}, f_m cover Arc[R_{m-1}, R_m]" : "neither covering holds";
    return pair;
}

std::vector<Real> dense_orbit_points(const CoveringCertificate& cert, const Real& delta) {
    require(cert.holds && cert.arc_length > 0, ErrorKind::PreconditionViolated, "certificate does not hold");
    require(delta > 0, ErrorKind::PreconditionViolated, "delta must be positive");
    auto maps = cert.interval_maps();
    std::size_t end_map = 0;
    for (std::size_t m = 1; m < maps.size(); ++m)
        if (abs(cert.image_end[m] - cert.arc_end) < abs(cert.image_end[end_map] - cert.arc_end)) end_map = m;
    // Orbit of 1 under the end-fixing map increases to the arc end.
    Real x = 0;
    Real a0 = cert.arc_start, a1 = cert.arc_end;
    auto to_arc = [&](const Real& y) { return Real(a0 + wrap_2pi(y - a0)); };
    std::size_t it = 0;
    while (true) {
        Real y = to_arc(x);
        if (y >= a0 && y <= a1) {
            x = y;
            break;
        }
        AngleMap F(cert.parameters[end_map], cert.degrees[end_map], cert.b);
        x = F(x);
        if (++it > 1000000) fail(ErrorKind::BudgetExceeded, "orbit of 1 did not enter the arc");
    }
    std::vector<Real> out;
    std::size_t windows = static_cast<std::size_t>(ceil(cert.arc_length / delta).convert_to<double>());
    for (std::size_t w = 0; w < windows; ++w) {
        Real lo = a0 + delta * Real(w), hi = std::min(Real(a0 + delta * Real(w + 1)), a1);
        if (hi - lo <= 0) continue;
        CoverResult r = cover_and_contract(maps, a0, a1, lo, hi);
        Real y = x;
        for (auto i = r.indices.rbegin(); i != r.indices.rend(); ++i) y = maps[*i].f(y);
        out.push_back(y);
    }
    return out;
}

}  // namespace isingdyn
