#include "isingdyn/reduction.hpp"

#include "isingdyn/errors.hpp"
#include "isingdyn/ising.hpp"
#include "isingdyn/tree.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace isingdyn {

namespace {

using json = nlohmann::json;

mpz_class zpow(const mpz_class& base, unsigned long e) {
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

mpq_class qpow(const mpq_class& base, unsigned long e) {
    mpq_class r(zpow(base.get_num(), e), zpow(base.get_den(), e));
    r.canonicalize();
    return r;
}

mpz_class lcm(const mpz_class& a, const mpz_class& b) {
    mpz_class r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

std::size_t bits_of(const mpz_class& z) { return mpz_sizeinbase(z.get_mpz_t(), 2); }

// Circular distance of two angles.
Real circ_dist(const Real& a, const Real& b) {
    Real d = abs(wrap_2pi(a - b));
    Real two_pi = 2 * real_pi();
    return d < two_pi - d ? d : Real(two_pi - d);
}

int sign_of(const Real& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

// Upper bound on 2pi - 6, the short cell of the Step 1 grid.
const mpq_class& short_cell() {
    static const mpq_class c = mpq_class(710, 113) - 6;
    return c;
}

Graph without_edge(const Graph& g, int u, int v) {
    Graph h = g;
    h.remove_edge(u, v);
    return h;
}

struct TrueValues {
    GaussianRational t, r;
};

TrueValues true_values(const Graph& g, int u, int v, HVariant variant, const UnitPoint& lambda,
                       const mpq_class& bhat) {
    PinnedWeights z = pinned_weights(without_edge(g, u, v), u, v, lambda.value(), bhat);
    if (variant == HVariant::Primed) {
        mpq_class c = (bhat * bhat - 1) * (bhat * bhat - 1);
        return {mul_rational(z.z_pp, c), mul_rational(z.z_mm, c)};
    }
    GaussianRational mixed = z.z_pm + z.z_mp;
    mpq_class b2 = bhat * bhat;
    return {z.z_pp + mul_rational(mixed, bhat) + mul_rational(z.z_mm, b2),
            mul_rational(z.z_pp, b2) + mul_rational(mixed, bhat) + z.z_mm};
}

}  // namespace

// ---------------------------------------------------------------- parameters

namespace {

void fill_chain(ReductionParams& p) {
    p.kappa = p.epsilon / 1000;
    p.epsilon2 = p.kappa * p.epsilon / 100000;
    mpq_class spread = mpq_class(zpow(2, 4 * p.n)) * qpow(2 * p.bhat, 2 * p.m);
    p.epsilon1 = p.epsilon2 / spread;
    p.epsilon0 = p.epsilon1 / (mpq_class(p.k) * mpq_class(zpow(4, p.k)));
}

ReductionParams base_params(int n, unsigned m, unsigned k, const mpq_class& bhat, const UnitPoint& lambda,
                            bool primed) {
    require(n >= 2 && m >= 1, ErrorKind::PreconditionViolated, "G needs an edge");
    require(sgn(bhat) > 0 && bhat < 1, ErrorKind::PreconditionViolated, "bhat must lie in (0,1)");
    require(k >= 2, ErrorKind::PreconditionViolated, "k must be at least 2");
    ReductionParams p;
    p.rho = real_pi() / 40;
    p.n = n;
    p.m = m;
    p.k = k;
    p.bhat = bhat;
    p.lambda = lambda;

    mpz_class q = lcm(bhat.get_den(), lcm(lambda.re().get_den(), lambda.im().get_den()));
    mpz_class pb = bhat.get_num() * (q / bhat.get_den());
    mpz_class p1 = abs(mpq_class(lambda.re() * q).get_num()), p2 = abs(mpq_class(lambda.im() * q).get_num());
    p.M = zpow(2, n) * zpow(pb, m) * zpow(p1 + p2, n) * zpow(q, m + n);

    mpz_class ql = lcm(lambda.re().get_den(), lambda.im().get_den());
    mpz_class l1 = abs(mpq_class(lambda.re() * ql).get_num()), l2 = abs(mpq_class(lambda.im() * ql).get_num());
    if (primed)
        p.M_lattice = zpow(2, n - 2) * zpow(l1 + l2, n) * zpow(bhat.get_den(), m - 1);
    else
        p.M_lattice = zpow(2, n) * zpow(l1 + l2, n) * zpow(bhat.get_den(), m + 1);
    return p;
}

}  // namespace

ReductionParams ReductionParams::paper(int n, unsigned m, unsigned k, const mpq_class& bhat,
                                       const UnitPoint& lambda, bool primed) {
    ReductionParams p = base_params(n, m, k, bhat, lambda, primed);
    p.epsilon = mpq_class(1, zpow(10 * p.M, 16));
    fill_chain(p);
    p.validate();
    return p;
}

ReductionParams ReductionParams::relaxed_for(int n, unsigned m, unsigned k, const mpq_class& bhat,
                                             const UnitPoint& lambda, bool primed, const RelaxedOverrides& over) {
    ReductionParams p = base_params(n, m, k, bhat, lambda, primed);
    p.relaxed = true;
    p.epsilon = over.epsilon ? *over.epsilon : mpq_class(1, 64 * zpow(p.M_lattice, 4));
    fill_chain(p);
    if (over.kappa) p.kappa = *over.kappa;
    if (over.epsilon0) {
        p.epsilon0 = *over.epsilon0;
        p.epsilon1 = p.epsilon0 * p.k * mpq_class(zpow(4, p.k));
        p.epsilon2 = gadget_error_bound(p.epsilon0, n, m, k, bhat);
    }
    p.validate();
    return p;
}

mpz_class ReductionParams::rounding_bound() const {
    const mpz_class& base = relaxed ? M_lattice : M;
    return 2 * base * base;
}

unsigned ReductionParams::precision_bits() const {
    std::size_t need = bits_of(kappa.get_den()) + 96;
    return std::max<unsigned>(default_precision_bits(), static_cast<unsigned>(need));
}

void ReductionParams::validate() const {
    require(mpz_class(40) * epsilon * zpow(M_lattice, 4) <= 1, ErrorKind::SeparationFailure,
            "epsilon too large for the lattice spacing (need 10 eps <= 1/(4 M^4))");
    require(800 * kappa <= epsilon, ErrorKind::PreconditionViolated, "kappa must be at most epsilon/800");
    require(tau < mpq_class(1, 200), ErrorKind::PreconditionViolated, "tau must be below 1/200");
    require(K > 1 && K * (1 - tau) <= 1 && K <= 1 + tau, ErrorKind::PreconditionViolated,
            "noise factor K exceeds the tau margin");
    require(sgn(epsilon0) > 0 && epsilon0 < epsilon1 && epsilon1 < epsilon2 && epsilon2 < kappa && kappa < epsilon,
            ErrorKind::PreconditionViolated, "the chain eps0 < eps1 < eps2 < kappa < eps fails");
    require(epsilon2 <= kappa * epsilon / 100000, ErrorKind::PreconditionViolated,
            "eps2 exceeds kappa eps / 10^5");
}

std::string ReductionParams::to_json() const {
    auto q = [](const mpq_class& x) { return rational_str(x); };
    return json{{"K", q(K)},
                {"rho", to_string(rho, 20)},
                {"tau", q(tau)},
                {"n", n},
                {"m", m},
                {"k", k},
                {"bhat", q(bhat)},
                {"lambda", lambda.str()},
                {"relaxed", relaxed},
                {"M", M.get_str()},
                {"M_lattice", M_lattice.get_str()},
                {"epsilon", q(epsilon)},
                {"kappa", q(kappa)},
                {"epsilon2", q(epsilon2)},
                {"epsilon1", q(epsilon1)},
                {"epsilon0", q(epsilon0)}}
        .dump();
}

mpq_class gadget_error_bound(const mpq_class& eps0, int n, unsigned m, unsigned k, const mpq_class& bhat) {
    return eps0 * k * mpq_class(zpow(4, k)) * mpq_class(zpow(2, 4 * n)) * qpow(2 * bhat, 2 * m);
}

// ---------------------------------------------------------------- oracle

const char* noise_mode_name(NoiseMode m) {
    switch (m) {
        case NoiseMode::Exact: return "exact";
        case NoiseMode::Factor: return "factor";
        case NoiseMode::Adversarial: return "adversarial";
    }
    return "?";
}

NoiseMode parse_noise_mode(const std::string& s) {
    if (s == "exact") return NoiseMode::Exact;
    if (s == "factor") return NoiseMode::Factor;
    if (s == "adversarial") return NoiseMode::Adversarial;
    fail(ErrorKind::InvalidArgument, "unknown noise mode " + s);
}

Oracle::Oracle(const UnitPoint& lambda, const mpq_class& b, const OracleConfig& cfg)
    : lambda_(lambda), b_(b), cfg_(cfg), rng_(cfg.seed) {
    require(cfg.K > 1, ErrorKind::InvalidArgument, "K must exceed 1");
    require(cfg.rho > 0 && cfg.rho < 3.14159265358979323846 / 2, ErrorKind::InvalidArgument, "rho out of range");
}

GaussianRational Oracle::evaluate(const Graph& g) const { return partition_reduced(g, lambda_.value(), b_); }

double Oracle::draw() {
    constexpr double edge = 1 - 1e-12;
    std::uint64_t x = rng_();
    if (cfg_.mode == NoiseMode::Adversarial) {
        // Consecutive queries are usually grid neighbours: alternate, with seeded flips.
        bool up = (count_ & 1) != 0;
        if ((x & 7) == 0) up = !up;
        return up ? edge : -edge;
    }
    double u = static_cast<double>(x >> 11) * 0x1.0p-53;
    return (2 * u - 1) * edge;
}

mpq_class Oracle::norm_of(const Cx& z) {
    Real a = cx_abs(z);
    std::lock_guard<std::mutex> lock(mu_);
    Real out = a;
    if (cfg_.mode != NoiseMode::Exact) {
        double u = draw();
        out = a * exp(Real(u) * log(to_real(cfg_.K)));
    }
    mpq_class res = to_rational(out);
    if (cfg_.record) log_.push_back({count_, false, to_double(a), to_double(out)});
    ++count_;
    return res;
}

mpq_class Oracle::arg_of(const Cx& z) {
    Real a = cx_arg(z);
    std::lock_guard<std::mutex> lock(mu_);
    Real out = a;
    if (cfg_.mode != NoiseMode::Exact) out = a + Real(draw()) * Real(cfg_.rho);
    out = wrap_2pi(out);
    mpq_class res = to_rational(out);
    if (cfg_.record) log_.push_back({count_, true, to_double(wrap_2pi(a)), to_double(out)});
    ++count_;
    return res;
}

mpq_class Oracle::norm_query(const Graph& g) { return norm_of(evaluate(g).to_cx()); }
mpq_class Oracle::arg_query(const Graph& g) { return arg_of(evaluate(g).to_cx()); }

std::size_t Oracle::queries() const {
    std::lock_guard<std::mutex> lock(mu_);
    return count_;
}

std::vector<QueryRecord> Oracle::transcript() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

std::string Oracle::transcript_json() const {
    json arr = json::array();
    for (const auto& q : transcript())
        arr.push_back({{"index", q.index}, {"kind", q.is_arg ? "arg" : "norm"}, {"exact", q.exact},
                       {"returned", q.returned}});
    return json{{"mode", noise_mode_name(cfg_.mode)}, {"seed", cfg_.seed}, {"queries", arr}}.dump();
}

// ---------------------------------------------------------------- probes

GadgetContext make_gadget_context(unsigned Delta, const mpq_class& b, const UnitPoint& lambda, const mpq_class& eps0,
                                  const SeedOptions& seed_opt) {
    GadgetContext c;
    c.Delta = Delta;
    c.b = b;
    c.seeds = seed_pair_search(Delta, b, lambda, seed_opt);
    c.t0 = implement_field(c.seeds, Delta, b, lambda, UnitPoint::one(), eps0, c.field).tree;
    c.t_pi = implement_field(c.seeds, Delta, b, lambda, UnitPoint::minus_one(), eps0, c.field).tree;
    return c;
}

Probe::Probe(const Graph& g, int u, int v, HVariant variant, const ReductionParams& params, Oracle& oracle,
             ProbeMode mode, const GadgetContext* gadget, bool audit)
    : g_(g), u_(u), v_(v), variant_(variant), params_(params), oracle_(oracle), mode_(mode), gadget_(gadget),
      kappa_(to_real(params.kappa)) {
    require(g.multiplicity(u, v) >= 1, ErrorKind::InvalidArgument, "e is not an edge of G");
    require(g.max_degree() <= 3, ErrorKind::DegreeViolation, "G must have maximum degree at most 3");
    require(oracle.lambda() == params.lambda, ErrorKind::InvalidArgument, "oracle and parameters disagree on lambda");
    if (mode == ProbeMode::Ideal) {
        require(oracle.b() == params.bhat, ErrorKind::InvalidArgument, "ideal mode queries at bhat");
        Graph h = without_edge(g, u, v);
        int s;
        if (variant == HVariant::Plain) {
            s = h.add_vertex();
            h.add_edge(u, s);
            h.add_edge(s, v);
        } else {
            int up = h.add_vertex();
            s = h.add_vertex();
            int vp = h.add_vertex();
            h.add_edge(u, up);
            h.add_edge(up, s);
            h.add_edge(s, vp);
            h.add_edge(vp, v);
            h.set_weight(up, {GaussianRational(-1), GaussianRational(1)});
            h.set_weight(vp, {GaussianRational(-1), GaussianRational(1)});
        }
        h.set_weight(s, {GaussianRational(1), GaussianRational(0)});
        x_ = oracle.evaluate(h).to_cx();
        h.set_weight(s, {GaussianRational(0), GaussianRational(1)});
        y_ = oracle.evaluate(h).to_cx();
    } else {
        require(gadget != nullptr, ErrorKind::InvalidArgument, "gadget mode needs gadget trees");
        require(oracle.b() == gadget->b, ErrorKind::InvalidArgument, "gadget mode queries at b");
        require(path_transfer(params.k, gadget->b).b_k == params.bhat, ErrorKind::InvalidArgument,
                "bhat is not b_k for the gadget edge activity");
    }
    if (audit) {
        TrueValues tv = true_values(g, u, v, variant, params.lambda, params.bhat);
        t_ = tv.t;
        r_ = tv.r;
        tc_ = tv.t.to_cx();
        rc_ = tv.r.to_cx();
        if (!tv.t.is_zero()) goal_ = wrap_2pi(cx_arg((-(tv.r / tv.t)).to_cx()));
    }
}

std::optional<Real> Probe::theta_goal() const { return goal_; }

void Probe::fill(const mpq_class& theta, const Real& est, const Cx& w) {
    ++calls_;
    last_.theta = theta;
    last_.estimate = est;
    last_.t = t_;
    last_.r = r_;
    last_.g_value.reset();
    last_.guarded = true;
    if (t_) {
        last_.g_value = w * tc_ + rc_;
        if (goal_) last_.guarded = circ_dist(to_real(theta), *goal_) >= kappa_;
    }
}

namespace {

struct GadgetProbeValue {
    Cx normalizer;
    Graph compact;
};

GadgetProbeValue gadget_graph(const Graph& g, int u, int v, HVariant variant, const ReductionParams& p,
                              const GadgetContext& gc, const mpq_class& theta) {
    mpq_class half = p.epsilon0 / 2;
    UnitPoint point = rational_circle_point(Angle::exact(theta), half);
    RootedTree tt = implement_field(gc.seeds, gc.Delta, gc.b, p.lambda, point, half, gc.field).tree;
    HThetaInput in;
    in.k = p.k;
    in.t_theta = tt;
    in.t0 = gc.t0;
    if (variant == HVariant::Primed) in.t_pi = gc.t_pi;
    in.theta_point = point;
    in.variant = variant;
    HTheta h = build_H_theta(g, u, v, in, gc.Delta, p.lambda, gc.b);
    return {h.normalizer.to_cx(), std::move(h.compact)};
}

}  // namespace

Real Probe::norm(const mpq_class& theta) {
    Real est;
    Cx w = cx_expi(to_real(theta));
    if (mode_ == ProbeMode::Ideal) {
        est = to_real(oracle_.norm_of(w * x_ + y_));
    } else {
        GadgetProbeValue gv = gadget_graph(g_, u_, v_, variant_, params_, *gadget_, theta);
        est = to_real(oracle_.norm_query(gv.compact)) / cx_abs(gv.normalizer);
    }
    fill(theta, est, w);
    return est;
}

Real Probe::arg(const mpq_class& theta) {
    Real est;
    Cx w = cx_expi(to_real(theta));
    if (mode_ == ProbeMode::Ideal) {
        est = to_real(oracle_.arg_of(w * x_ + y_));
    } else {
        GadgetProbeValue gv = gadget_graph(g_, u_, v_, variant_, params_, *gadget_, theta);
        est = wrap_2pi(to_real(oracle_.arg_query(gv.compact)) - cx_arg(gv.normalizer));
    }
    fill(theta, est, w);
    return est;
}

// ---------------------------------------------------------------- searches

AngleInterval locate_interval_norm(const ProbeFn& norm) {
    constexpr int L = 19;
    std::vector<Real> gh(L);
    for (int j = 0; j < L; ++j) gh[j] = norm(mpq_class(j, 3));
    std::vector<int> d(L);
    for (int j = 0; j < L; ++j) d[j] = sign_of(gh[(j + 1) % L] - gh[j]);
    auto at = [&](int j) { return d[((j % L) + L) % L]; };

    std::vector<int> valid;
    for (int c = 0; c < L; ++c) {
        bool ok = true;
        for (int i = 2; i <= 8 && ok; ++i) ok = at(c - i) == -1 && at(c + i) == 1;
        if (ok) valid.push_back(c);
    }
    require(!valid.empty(), ErrorKind::InconsistentOracle, "no index fits the decrease/increase pattern");
    int c0 = valid.front(), lo = 0, hi = 0;
    for (int c : valid) {
        int off = ((c - c0 + L + 9) % L) - 9;
        lo = std::min(lo, off);
        hi = std::max(hi, off);
    }
    require(hi - lo <= 4, ErrorKind::InconsistentOracle, "pattern matches are too far apart");
    int a = c0 + hi - 2, b = c0 + lo + 3;
    int sa = ((a % L) + L) % L;
    AngleInterval out{mpq_class(sa, 3), 0};
    for (int j = a; j < b; ++j) {
        int cell = ((j % L) + L) % L;
        out.length += cell == L - 1 ? short_cell() : mpq_class(1, 3);
    }
    return out;
}

AngleInterval refine_interval_norm(const ProbeFn& norm, const AngleInterval& cur, const mpq_class& kappa) {
    require(cur.length > 100 * kappa, ErrorKind::PreconditionViolated, "interval already below 100 kappa");
    require(cur.length < mpq_class(20943, 10000), ErrorKind::PreconditionViolated, "interval longer than 2pi/3");
    constexpr int L = 19;
    std::vector<mpq_class> phi(L + 1);
    std::vector<Real> gh(L + 1);
    for (int j = 0; j <= L; ++j) {
        phi[j] = cur.start + cur.length * j / L;
        gh[j] = norm(phi[j]);
    }
    std::vector<int> d(L);
    for (int j = 0; j < L; ++j) d[j] = sign_of(gh[j + 1] - gh[j]);

    int lo = L, hi = -1;
    for (int c = 0; c < L; ++c) {
        bool ok = true;
        for (int j = 0; j <= c - 2 && ok; ++j) ok = d[j] == -1;
        for (int j = c + 2; j < L && ok; ++j) ok = d[j] == 1;
        if (ok) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    require(hi >= 0, ErrorKind::InconsistentOracle, "no index fits the decrease/increase pattern");
    require(hi - lo <= 6, ErrorKind::InconsistentOracle, "pattern matches are too far apart");
    int a = std::max(hi - 3, 0), b = std::min(lo + 4, L);
    return {phi[a], phi[b] - phi[a]};
}

AngleInterval refine_interval_arg(const ProbeFn& arg, const AngleInterval& cur, const mpq_class& kappa) {
    require(cur.length > 100 * kappa, ErrorKind::PreconditionViolated, "interval already below 100 kappa");
    require(cur.length <= mpq_class(63, 10), ErrorKind::PreconditionViolated, "interval longer than 63/10");
    constexpr int L = 26;
    auto phi = [&](int j) { return mpq_class(cur.start + cur.length * j / L); };
    std::vector<Real> ah(L + 3);  // index j + 1 for j = -1..27
    for (int j = -1; j <= L + 1; ++j) ah[j + 1] = arg(phi(j));
    Real jump = 3 * real_pi() / 5;

    int first = 0, last = 0;
    bool found = false;
    for (int a = -1; a <= L - 1; ++a) {
        bool hit = circ_dist(ah[a + 1], ah[a + 3]) >= jump;
        if (hit && !found) {
            found = true;
            first = last = a;
        } else if (hit && a == last + 1) {
            last = a;
        } else if (found && !hit) {
            break;
        }
    }
    require(found, ErrorKind::InconsistentOracle, "no jump of the argument detected");
    AngleInterval out{phi(first) - kappa, phi(last + 2) - phi(first) + 2 * kappa};
    require(4 * out.length <= cur.length, ErrorKind::InconsistentOracle, "detected jump region too wide");
    return out;
}

const char* search_kind_name(SearchKind s) { return s == SearchKind::Norm ? "norm" : "arg"; }

SearchTrace search_theta(const ProbeFn& probe, SearchKind kind, const mpq_class& kappa) {
    SearchTrace tr;
    std::map<mpq_class, Real> memo;
    ProbeFn cached = [&](const mpq_class& th) {
        auto it = memo.find(th);
        if (it != memo.end()) return it->second;
        ++tr.queries;
        Real v = probe(th);
        memo.emplace(th, v);
        return v;
    };
    AngleInterval iv;
    if (kind == SearchKind::Norm) {
        iv = locate_interval_norm(cached);
        tr.intervals.push_back(iv);
        while (iv.length > 100 * kappa) {
            iv = refine_interval_norm(cached, iv, kappa);
            tr.intervals.push_back(iv);
            memo.clear();
        }
    } else {
        iv = {0, mpq_class(63, 10)};
        tr.intervals.push_back(iv);
        while (iv.length > 100 * kappa) {
            iv = refine_interval_arg(cached, iv, kappa);
            tr.intervals.push_back(iv);
            memo.clear();
        }
    }
    tr.theta_hat = iv.start + iv.length / 2;
    return tr;
}

// ---------------------------------------------------------------- ratios

RatioResult recover_ratio(const Graph& g, int u, int v, HVariant variant, Oracle& oracle, unsigned k,
                          const mpq_class& bhat, const RatioOptions& opt) {
    require(g.is_simple(), ErrorKind::InvalidArgument, "G must be simple");
    bool primed = variant == HVariant::Primed;
    int n = g.num_vertices();
    unsigned m = g.edge_count();
    RatioResult res;
    res.params = opt.paper_constants ? ReductionParams::paper(n, m, k, bhat, oracle.lambda(), primed)
                                     : ReductionParams::relaxed_for(n, m, k, bhat, oracle.lambda(), primed,
                                                                    opt.overrides);
    const ReductionParams& p = res.params;
    PrecisionScope prec(p.precision_bits());

    Probe probe(g, u, v, variant, p, oracle, opt.mode, opt.gadget, opt.audit);
    ProbeFn fn = opt.search == SearchKind::Norm ? ProbeFn([&](const mpq_class& th) { return probe.norm(th); })
                                                : ProbeFn([&](const mpq_class& th) { return probe.arg(th); });
    res.trace = search_theta(fn, opt.search, p.kappa);
    res.theta_goal = probe.theta_goal();

    res.rounding.theta_hat = res.trace.theta_hat;
    res.rounding.approx = rational_circle_point(Angle::exact(res.trace.theta_hat), p.kappa).value();
    mpz_class K = p.rounding_bound();
    auto re = continued_fraction_round(res.rounding.approx.re, K);
    auto im = continued_fraction_round(res.rounding.approx.im, K);
    require(re && im, ErrorKind::InconsistentOracle, "no lattice point near the estimate");
    GaussianRational goal(*re, *im);
    require(goal.norm() == 1, ErrorKind::InconsistentOracle, "rounded ratio is off the unit circle");
    res.rounding.rounded = goal;
    res.value = -goal;
    return res;
}

const char* edge_case_name(EdgeCase c) {
    switch (c) {
        case EdgeCase::ZeroPlusPlus: return "zero_pp";
        case EdgeCase::ZeroMixed: return "zero_mixed";
        case EdgeCase::General: return "general";
    }
    return "?";
}

EdgeRatio assemble_edge_ratio(const mpq_class& bhat, const GaussianRational& lambda, const GaussianRational& r,
                              const std::function<GaussianRational()>& r_prime,
                              const std::function<GaussianRational()>& r_double_prime) {
    const GaussianRational one(1);
    const GaussianRational A(bhat), B(1), C(1);
    const GaussianRational A1 = mul_rational(lambda + one, bhat);
    const GaussianRational B1 = one + mul_rational(lambda, bhat * bhat);
    const GaussianRational C1 = GaussianRational(bhat * bhat) + lambda;
    // x = (z+- + z-+)/z++ from one ratio and y = z--/z++.
    auto solve_x = [](const GaussianRational& a, const GaussianRational& b, const GaussianRational& c,
                      const GaussianRational& ratio, const GaussianRational& y) {
        GaussianRational den = a * (ratio * c - b);
        require(!den.is_zero(), ErrorKind::InconsistentOracle, "degenerate ratio");
        return (a * a + b * b * y - ratio * (a * a * y + c * c)) / den;
    };

    EdgeRatio out;
    GaussianRational x, y;
    if (r != B / C) {
        y = r_double_prime();
        x = solve_x(A, B, C, r, y);
    } else {
        GaussianRational r1 = r_prime();
        if (r1 == B1 / C1) {
            out.which = EdgeCase::ZeroPlusPlus;
            out.r_star = GaussianRational(bhat);
            return out;
        }
        y = r_double_prime();
        x = solve_x(A1, B1, C1, r1, y);
    }
    if (x.is_zero()) {
        out.which = EdgeCase::ZeroMixed;
        out.r_star = one;
        return out;
    }
    GaussianRational den = one + y + x;
    require(!den.is_zero(), ErrorKind::PreconditionViolated, "Z of G - e vanishes");
    out.r_star = (one + y + mul_rational(x, bhat)) / den;
    return out;
}

EdgeRatio restore_edge_ratio(const Graph& g, int u, int v, Oracle& oracle, unsigned k, const mpq_class& bhat,
                             const RatioOptions& opt) {
    std::vector<RatioResult> calls;
    calls.push_back(recover_ratio(g, u, v, HVariant::Plain, oracle, k, bhat, opt));
    GaussianRational r = calls.back().value;
    auto r_prime = [&] {
        Graph g1 = without_edge(g, u, v);
        int up = g1.add_vertex(), vp = g1.add_vertex();
        g1.add_edge(u, up);
        g1.add_edge(up, vp);
        g1.add_edge(vp, v);
        calls.push_back(recover_ratio(g1, up, vp, HVariant::Plain, oracle, k, bhat, opt));
        return calls.back().value;
    };
    auto r_double_prime = [&] {
        calls.push_back(recover_ratio(g, u, v, HVariant::Primed, oracle, k, bhat, opt));
        return calls.back().value;
    };
    EdgeRatio out = assemble_edge_ratio(bhat, oracle.lambda().value(), r, r_prime, r_double_prime);
    out.calls = std::move(calls);
    return out;
}

std::string OracleRun::to_json() const {
    json edges_j = json::array();
    for (const auto& e : edges) {
        json calls = json::array();
        for (const auto& c : e.calls) {
            json ivs = json::array();
            for (const auto& iv : c.trace.intervals)
                ivs.push_back({{"start", rational_str(iv.start)}, {"length", rational_str(iv.length)}});
            json cj{{"value", c.value.str()},
                    {"params", json::parse(c.params.to_json())},
                    {"queries", c.trace.queries},
                    {"intervals", ivs},
                    {"theta_hat", rational_str(c.rounding.theta_hat)},
                    {"approx", c.rounding.approx.str()},
                    {"rounded", c.rounding.rounded.str()}};
            if (c.theta_goal) cj["theta_goal"] = to_string(*c.theta_goal, 30);
            calls.push_back(cj);
        }
        edges_j.push_back({{"r_star", e.r_star.str()}, {"case", edge_case_name(e.which)}, {"calls", calls}});
    }
    return json{{"value", value.str()},
                {"queries", queries},
                {"worst_theta_error_over_kappa", to_double(worst_theta_error)},
                {"edges", edges_j}}
        .dump();
}

OracleRun partition_via_oracle(const Graph& g, Oracle& oracle, unsigned k, const mpq_class& bhat,
                               const RatioOptions& opt, const std::vector<int>& edge_order) {
    require(g.is_simple() && g.pins().empty() && g.weights().empty(), ErrorKind::InvalidArgument,
            "G must be a plain simple graph");
    require(g.max_degree() <= 3, ErrorKind::DegreeViolation, "G must have maximum degree at most 3");
    const auto& edges = g.edges();
    std::vector<int> order = edge_order;
    if (order.empty())
        for (std::size_t i = 0; i < edges.size(); ++i) order.push_back(static_cast<int>(i));
    {
        std::vector<int> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        bool perm = sorted.size() == edges.size();
        for (std::size_t i = 0; perm && i < sorted.size(); ++i) perm = sorted[i] == static_cast<int>(i);
        require(perm, ErrorKind::InvalidArgument, "edge order is not a permutation of the edges");
    }

    OracleRun run;
    std::size_t before = oracle.queries();
    run.value = pow(oracle.lambda().value() + GaussianRational(1), g.num_vertices());
    Graph cur(g.num_vertices());
    for (int idx : order) {
        const Edge& e = edges[idx];
        cur.add_edge(e.u, e.v);
        EdgeRatio er = restore_edge_ratio(cur, e.u, e.v, oracle, k, bhat, opt);
        require(!er.r_star.is_zero(), ErrorKind::PreconditionViolated,
                "Z vanishes on an intermediate graph; bhat is not certified for it");
        run.value *= er.r_star;
        for (const auto& c : er.calls) {
            if (!c.theta_goal) continue;
            PrecisionScope prec(c.params.precision_bits());
            Real err = circ_dist(to_real(c.trace.theta_hat), *c.theta_goal) / to_real(c.params.kappa);
            if (err > run.worst_theta_error) run.worst_theta_error = err;
        }
        run.edges.push_back(std::move(er));
    }
    run.queries = oracle.queries() - before;
    return run;
}

}  // namespace isingdyn
