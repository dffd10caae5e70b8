#include "isingdyn/gadgets.hpp"

#include "isingdyn/errors.hpp"
#include "isingdyn/ising.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <random>

namespace isingdyn {

namespace {

using json = nlohmann::json;

UnitPoint upper(const UnitPoint& z) { return sgn(z.im()) < 0 ? z.conj() : z; }

Real angle_of(const UnitPoint& z) { return cx_arg(z.to_cx()); }

Real cx_dist(const Cx& a, const Cx& b) { return cx_abs(a - b); }

mpz_class mpz_pow(unsigned base, unsigned e) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), base, e);
    return r;
}

}  // namespace

void check_tree_class(const RootedTree& t, unsigned Delta) {
    require(t.root_degree() + 1 <= Delta, ErrorKind::DegreeViolation,
            "root degree " + std::to_string(t.root_degree()) + " exceeds " + std::to_string(Delta - 1));
    require(t.max_degree() <= Delta, ErrorKind::DegreeViolation,
            "max degree " + std::to_string(t.max_degree()) + " exceeds " + std::to_string(Delta));
}

RootedTree attach_trees(const RootedTree& t2, const RootedTree& t1, unsigned k, unsigned Delta) {
    require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
    check_tree_class(t2, Delta);
    check_tree_class(t1, Delta);
    require(t2.root_degree() + k + 1 <= Delta, ErrorKind::DegreeViolation,
            "root of T2 has room for " + std::to_string(Delta - 1 - t2.root_degree()) + " more children");
    return RootedTree::attach(t2, t1, k);
}

// ---------------------------------------------------------------- seeds

namespace {

// Arg of xi whose attracting fixed point of f_{xi,1} has multiplier m; 0 when m <= (1-b)/(1+b).
Real seed_angle_for_multiplier(const Real& m, const mpq_class& b) {
    Real bb = to_real(b);
    Real c = ((1 - bb * bb) / m - 1 - bb * bb) / (2 * bb);
    if (c >= 1) return 0;
    if (c <= -1) return real_pi();
    Real phi = acos(c);
    Cx z = cx_expi(phi);
    Cx num = z * (Cx{bb, 0} * z + Cx{1, 0});
    Cx den = z + Cx{bb, 0};
    return cx_arg(num / den);
}

struct PoolEntry {
    RootedTree tree;
    Real angle;
    double size;
};

}  // namespace

SeedPair seed_pair_search(unsigned Delta, const mpq_class& b, const UnitPoint& lambda_in, const SeedOptions& opt) {
    require(Delta >= 3, ErrorKind::PreconditionViolated, "Delta must be at least 3");
    require(sgn(b) > 0 && b < 1, ErrorKind::PreconditionViolated, "b must lie in (0,1)");
    require(sgn(lambda_in.im()) != 0, ErrorKind::PreconditionViolated, "lambda must differ from 1 and -1");
    if (opt.budget == 0) fail(ErrorKind::BudgetExceeded, "seed search budget is 0");
    const unsigned d = Delta - 1;
    const UnitPoint lambda = upper(lambda_in);

    ThresholdResult th = lambda_threshold(1, b);
    require(th.exists, ErrorKind::PreconditionViolated, "no threshold for k = 1");
    Real hi = seed_angle_for_multiplier(Real(opt.max_multiplier), b);
    hi = std::min(hi, th.arg_lambda_k);
    Real lo = seed_angle_for_multiplier(Real(0.5), b);
    require(lo < hi, ErrorKind::PreconditionViolated, "empty seed arc");

    std::vector<std::pair<RootedTree, Real>> seeds;  // root degree 1, float field angle
    std::size_t screened = 0;
    {
        PrecisionScope prec(96);
        const Real tp = 2 * real_pi();
        const Real arg_l = angle_of(lambda);
        AngleMap f1(arg_l, 1, b);
        std::vector<PoolEntry> pool;
        std::map<std::size_t, std::size_t> bucket_of;
        std::map<std::size_t, std::size_t> seed_bucket;
        auto bucket = [&](const Real& a) {
            Real w = wrap_2pi(a) / tp * Real(opt.buckets);
            return std::min<std::size_t>(opt.buckets - 1, static_cast<std::size_t>(w.convert_to<double>()));
        };
        auto offer = [&](const RootedTree& t, const Real& angle) {
            double sz = t.size().get_d();
            std::size_t bk = bucket(angle);
            auto it = bucket_of.find(bk);
            if (it == bucket_of.end()) {
                bucket_of[bk] = pool.size();
                pool.push_back({t, wrap_2pi(angle), sz});
            } else if (sz < pool[it->second].size) {
                pool[it->second] = {t, wrap_2pi(angle), sz};
            } else {
                return;
            }
            // The seed candidate attach(vertex, t, 1).
            Real s = wrap_pm_pi(f1(angle));
            if (s > lo && s < hi) {
                std::size_t sb = bucket(s);
                auto jt = seed_bucket.find(sb);
                RootedTree cand = RootedTree::attach(RootedTree::vertex(), t, 1);
                if (jt == seed_bucket.end()) {
                    seed_bucket[sb] = seeds.size();
                    seeds.push_back({cand, s});
                } else if (cand.size() < seeds[jt->second].first.size()) {
                    seeds[jt->second] = {cand, s};
                }
            }
        };
        offer(RootedTree::vertex(), arg_l);
        std::mt19937_64 rng(opt.rng_seed);
        const Real width = hi - lo;
        auto spread = [&] {
            if (seeds.size() < 2) return Real(0);
            auto [mn, mx] = std::minmax_element(seeds.begin(), seeds.end(),
                                                [](const auto& a, const auto& c) { return a.second < c.second; });
            return Real(mx->second - mn->second);
        };
        while (screened < opt.budget) {
            std::size_t ia = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
            std::size_t ib = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
            const PoolEntry& a = pool[ia];
            if (a.tree.root_degree() >= d) {
                ++screened;
                continue;
            }
            unsigned k = std::uniform_int_distribution<unsigned>(1, d - a.tree.root_degree())(rng);
            RootedTree t = RootedTree::attach(a.tree, pool[ib].tree, k);
            Real angle = AngleMap(a.angle, k, b)(pool[ib].angle);
            ++screened;
            offer(t, angle);
            if (screened % 1000 == 0 && spread() >= width * Real(0.6)) break;
        }
    }
    if (seeds.size() < 2) fail(ErrorKind::BudgetExceeded, "fewer than two seed candidates after " +
                                                              std::to_string(screened) + " trees");

    std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& c) { return a.second < c.second; });
    const mpq_class tol = mpq_class(1, 1000000000) * mpq_class(1, 1000000000) * mpq_class(1, 1000000000);
    std::size_t lo_i = 0, hi_i = seeds.size() - 1;
    std::map<std::size_t, std::optional<std::pair<UnitPoint, Real>>> confirmed;
    auto confirm = [&](std::size_t i) -> std::optional<std::pair<UnitPoint, Real>> {
        auto it = confirmed.find(i);
        if (it != confirmed.end()) return it->second;
        std::optional<std::pair<UnitPoint, Real>> r;
        UnitPoint xi = tree_field(seeds[i].first, lambda, b);
        if (sgn(xi.im()) > 0 && !in_chaotic_regime(1, b, xi)) {
            auto fp = attracting_fixed_point(MapParams(xi, 1, b), tol);
            if (fp && fp->multiplier > Real(0.5) && fp->multiplier < 1) r = std::make_pair(xi, fp->multiplier);
        }
        return confirmed[i] = r;
    };
    while (lo_i < hi_i) {
        auto c1 = confirm(lo_i);
        if (!c1) {
            ++lo_i;
            continue;
        }
        auto c2 = confirm(hi_i);
        if (!c2) {
            --hi_i;
            continue;
        }
        CoveringCertificate cert = verify_easy_even(c1->first, c2->first, 1, b);
        if (!cert.holds) {
            ++lo_i;
            continue;
        }
        SeedPair out;
        out.t1 = seeds[lo_i].first;
        out.t2 = seeds[hi_i].first;
        out.xi1 = c1->first;
        out.xi2 = c2->first;
        out.multiplier1 = c1->second;
        out.multiplier2 = c2->second;
        out.arc_start = cert.arc_start;
        out.arc_end = cert.arc_end;
        out.arc_lo_angle = lo;
        out.arc_hi_angle = hi;
        out.screened = screened;
        out.conjugated = sgn(lambda_in.im()) < 0;
        return out;
    }
    fail(ErrorKind::BudgetExceeded, "no seed pair confirmed exactly after " + std::to_string(screened) + " trees");
}

// ---------------------------------------------------------------- field implementation

const char* field_step_name(FieldStep s) {
    switch (s) {
        case FieldStep::Xi1: return "xi1";
        case FieldStep::Xi2: return "xi2";
        case FieldStep::LambdaD: return "lambda_d";
    }
    return "?";
}

namespace {

FieldStep parse_step(const std::string& s) {
    if (s == "xi1") return FieldStep::Xi1;
    if (s == "xi2") return FieldStep::Xi2;
    if (s == "lambda_d") return FieldStep::LambdaD;
    fail(ErrorKind::InvalidArgument, "unknown field step " + s);
}

RootedTree two_path() { return RootedTree::attach(RootedTree::vertex(), RootedTree::vertex(), 1); }

}  // namespace

std::string FieldPlan::to_json() const {
    json steps = json::array();
    for (auto s : script) steps.push_back(field_step_name(s));
    json j{{"Delta", Delta},
           {"b", rational_str(b)},
           {"lambda", lambda.str()},
           {"target", target.str()},
           {"eps", rational_str(eps)},
           {"trivial", trivial}};
    if (!trivial) {
        j["inner_target"] = inner_target.str();
        j["inner_eps"] = rational_str(inner_eps);
        j["seed1"] = json::parse(seed1.to_json());
        j["seed2"] = json::parse(seed2.to_json());
        j["arc"] = {to_string(arc_start, 40), to_string(arc_end, 40)};
        j["N"] = N;
        j["N_bound"] = N_bound ? json(*N_bound) : json(nullptr);
        j["J"] = {to_string(j_lo, 40), to_string(j_hi, 40)};
        j["script"] = steps;
    }
    j["predicted_size"] = predicted_size.get_str();
    return j.dump(2);
}

FieldPlan FieldPlan::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("plan json: ") + e.what());
    }
    FieldPlan p;
    try {
        p.Delta = j.at("Delta").get<unsigned>();
        p.b = parse_rational(j.at("b").get<std::string>());
        p.lambda = UnitPoint(parse_gaussian(j.at("lambda").get<std::string>()));
        p.target = UnitPoint(parse_gaussian(j.at("target").get<std::string>()));
        p.eps = parse_rational(j.at("eps").get<std::string>());
        p.trivial = j.at("trivial").get<bool>();
        p.predicted_size = mpz_class(j.at("predicted_size").get<std::string>());
        if (!p.trivial) {
            p.inner_target = UnitPoint(parse_gaussian(j.at("inner_target").get<std::string>()));
            p.inner_eps = parse_rational(j.at("inner_eps").get<std::string>());
            p.seed1 = RootedTree::from_json(j.at("seed1").dump());
            p.seed2 = RootedTree::from_json(j.at("seed2").dump());
            p.arc_start = Real(j.at("arc").at(0).get<std::string>());
            p.arc_end = Real(j.at("arc").at(1).get<std::string>());
            p.N = j.at("N").get<unsigned>();
            if (!j.at("N_bound").is_null()) p.N_bound = j.at("N_bound").get<unsigned>();
            p.j_lo = Real(j.at("J").at(0).get<std::string>());
            p.j_hi = Real(j.at("J").at(1).get<std::string>());
            for (const auto& s : j.at("script")) p.script.push_back(parse_step(s.get<std::string>()));
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("plan json: ") + e.what());
    }
    return p;
}

RootedTree build_from_plan(const FieldPlan& plan) {
    if (plan.trivial) return two_path();
    const unsigned d = plan.Delta - 1;
    RootedTree t = plan.seed1;
    for (auto s : plan.script) {
        switch (s) {
            case FieldStep::Xi1: t = RootedTree::attach(plan.seed1, t, 1); break;
            case FieldStep::Xi2: t = RootedTree::attach(plan.seed2, t, 1); break;
            case FieldStep::LambdaD: t = RootedTree::attach(RootedTree::vertex(), t, d); break;
        }
    }
    t = RootedTree::attach(RootedTree::vertex(), t, 1);
    check_tree_class(t, plan.Delta);
    return t;
}

namespace {

FieldPlan plan_inner(const SeedPair& seeds, unsigned Delta, const mpq_class& b, const UnitPoint& lambda,
                     const UnitPoint& w, const mpq_class& e, const FieldOptions& opt) {
    const unsigned d = Delta - 1;
    const Real pi = real_pi(), tp = 2 * pi;
    FieldPlan plan;
    plan.seed1 = seeds.t1;
    plan.seed2 = seeds.t2;
    CoveringCertificate cert = verify_easy_even(seeds.xi1, seeds.xi2, 1, b);
    require(cert.holds, ErrorKind::SeedUnavailable, "seed pair does not cover its arc: " + cert.verdict);
    require(cert.parameters[0] == seeds.xi1, ErrorKind::SeedUnavailable, "seed pair is out of order");
    const Real a0 = cert.arc_start, a1 = cert.arc_end;
    plan.arc_start = a0;
    plan.arc_end = a1;

    AngleMap F(lambda, d, b);
    auto FN = [&](Real x, unsigned n) {
        for (unsigned i = 0; i < n; ++i) x = F(x);
        return x;
    };
    unsigned N = 1;
    while (FN(a1, N) - FN(a0, N) < tp) {
        if (++N > opt.max_N) fail(ErrorKind::BudgetExceeded, "image of the seed arc does not wrap the circle");
    }
    plan.N = N;
    mpq_class bd = b, edge = mpq_class(d - 1, d + 1);
    if (bd < edge) {
        Real c1 = Real(d) * (1 - to_real(b)) / (1 + to_real(b));
        plan.N_bound = static_cast<unsigned>(ceil(log(tp / (a1 - a0)) / log(c1)).convert_to<double>());
    }

    // Bisect the monotone lift of f^N for a subarc whose image has length <= e/2 around w.
    Real lo_img = FN(a0, N);
    Real phi = angle_of(w);
    Real target = phi + tp * ceil((lo_img - phi) / tp);
    Real jl = a0, jh = a1, half = to_real(e) / 2;
    for (int it = 0; FN(jh, N) - FN(jl, N) > half; ++it) {
        if (it > 100000) fail(ErrorKind::NoConvergence, "bisection on the expanding lift");
        Real mid = (jl + jh) / 2;
        if (FN(mid, N) <= target)
            jl = mid;
        else
            jh = mid;
    }
    plan.j_lo = jl;
    plan.j_hi = jh;

    auto maps = cert.interval_maps();
    CoverResult cover = cover_and_contract(maps, a0, a1, jl, jh, CoverOptions{opt.cover_budget, 1024});
    require(cover.verified, ErrorKind::BudgetExceeded, "covering search did not reach the target subarc");

    // Bring xi1 into the arc.
    AngleMap g1(seeds.xi1, 1, b), g2(seeds.xi2, 1, b);
    auto to_arc = [&](const Real& y) { return Real(a0 + wrap_2pi(y - a0)); };
    Real z = angle_of(seeds.xi1);
    for (std::size_t it = 0;; ++it) {
        if (it > 100000) fail(ErrorKind::BudgetExceeded, "orbit of xi1 does not enter the seed arc");
        if (to_arc(z) <= a1) {
            z = to_arc(z);
            break;
        }
        Real y = g2(z);
        if (to_arc(y) <= a1) {
            plan.script.push_back(FieldStep::Xi2);
            z = to_arc(y);
            break;
        }
        plan.script.push_back(FieldStep::Xi1);
        z = g1(z);
    }
    for (auto i = cover.indices.rbegin(); i != cover.indices.rend(); ++i) {
        z = maps[*i].f(z);
        plan.script.push_back(*i == 0 ? FieldStep::Xi1 : FieldStep::Xi2);
    }
    for (unsigned i = 0; i < N; ++i) plan.script.push_back(FieldStep::LambdaD);

    mpz_class s = seeds.t1.size();
    for (auto st : plan.script) {
        if (st == FieldStep::Xi1) s += seeds.t1.size();
        if (st == FieldStep::Xi2) s += seeds.t2.size();
        if (st == FieldStep::LambdaD) break;
    }
    mpz_class dN = mpz_pow(d, N);
    plan.predicted_size = (dN - 1) / (d - 1) + dN * s + 1;
    return plan;
}

}  // namespace

FieldResult implement_field(const SeedPair& seeds, unsigned Delta, const mpq_class& b, const UnitPoint& lambda,
                            const UnitPoint& target, const mpq_class& eps, const FieldOptions& opt) {
    require(Delta >= 3, ErrorKind::PreconditionViolated, "Delta must be at least 3");
    require(sgn(eps) > 0, ErrorKind::InvalidArgument, "eps must be positive");
    const unsigned d = Delta - 1;
    FieldResult res;
    res.plan.Delta = Delta;
    res.plan.b = b;
    res.plan.lambda = lambda;
    res.plan.target = target;
    res.plan.eps = eps;
    auto finish = [&](RootedTree t) {
        res.tree = std::move(t);
        check_tree_class(res.tree, Delta);
        res.field = tree_field(res.tree, lambda, b);
        GaussianRational diff = res.field.value() - target.value();
        res.dist_sq = diff.norm();
        return res.dist_sq <= eps * eps;
    };
    if (eps >= 2) {
        res.plan.trivial = true;
        res.plan.predicted_size = 2;
        finish(two_path());
        return res;
    }
    const bool conj = sgn(lambda.im()) < 0;
    require(conj == seeds.conjugated, ErrorKind::SeedUnavailable, "seeds were found for the other half-plane");
    const UnitPoint lam = upper(lambda), tgt = conj ? target.conj() : target;
    require(tree_field(seeds.t1, lam, b) == seeds.xi1 && tree_field(seeds.t2, lam, b) == seeds.xi2,
            ErrorKind::SeedUnavailable, "seed trees do not implement the recorded fields");

    // Solve lam (w+b)/(bw+1) = tgt.
    GaussianRational u = tgt.value() * lam.value().conj();
    GaussianRational w = (u - GaussianRational(b)) / (GaussianRational(1) - mul_rational(u, b));
    UnitPoint inner(w);
    mpq_class factor = std::min(mpq_class(d - 1, d + 1), mpq_class((1 - b) / (1 + b)));
    factor.canonicalize();
    mpq_class e = eps * factor;
    for (unsigned attempt = 0; attempt <= opt.retries; ++attempt, e /= 4) {
        FieldPlan p = plan_inner(seeds, Delta, b, lam, inner, e, opt);
        p.Delta = Delta;
        p.b = b;
        p.lambda = lambda;
        p.target = target;
        p.eps = eps;
        p.inner_target = conj ? inner.conj() : inner;
        p.inner_eps = e;
        res.plan = p;
        RootedTree t = build_from_plan(p);
        require(t.size() == p.predicted_size, ErrorKind::HypothesisFailed,
                "tree size " + t.size().get_str() + " differs from the predicted " + p.predicted_size.get_str());
        if (finish(t)) return res;
    }
    fail(ErrorKind::BudgetExceeded, "no tree within eps of the target after retries");
}

// ---------------------------------------------------------------- decorated paths and H_theta

namespace {

struct M2 {
    GaussianRational a, b, c, d;
};

M2 mul(const M2& x, const M2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

// Copies every non-root vertex of tree (root 0) into g, identifying the root with `at`.
void graft(Graph& g, int at, const Graph& tree) {
    std::vector<int> map(tree.num_vertices());
    map[0] = at;
    for (int x = 1; x < tree.num_vertices(); ++x) map[x] = g.add_vertex();
    for (const auto& e : tree.edges()) g.add_edge(map[e.u], map[e.v], e.mult);
}

}  // namespace

GadgetWeights decorated_path_weights(unsigned k, const GaussianRational& q_plus, const GaussianRational& q_minus,
                                     const mpq_class& b) {
    require(k >= 2, ErrorKind::InvalidArgument, "path needs at least two vertices");
    const M2 edge{GaussianRational(1), GaussianRational(b), GaussianRational(b), GaussianRational(1)};
    const M2 site{q_plus, GaussianRational(0), GaussianRational(0), q_minus};
    M2 a = edge;
    for (unsigned i = 2; i < k; ++i) a = mul(mul(a, site), edge);
    GadgetWeights w;
    w.Q_plus = q_plus;
    w.Q_minus = q_minus;
    w.A_pp = a.a;
    w.A_pm = a.b;
    w.A_mp = a.c;
    w.A_mm = a.d;
    return w;
}

DecoratedPath build_decorated_path(unsigned k, const RootedTree& t0, unsigned Delta, const UnitPoint& lambda,
                                   const mpq_class& b) {
    require(k >= 2, ErrorKind::InvalidArgument, "path needs at least two vertices");
    if (k > 2) {
        require(t0.root_degree() + 2 <= Delta, ErrorKind::DegreeViolation, "T0 root degree leaves no room on the path");
        require(t0.max_degree() <= Delta, ErrorKind::DegreeViolation, "T0 exceeds the degree bound");
    }
    DecoratedPath p;
    p.k = k;
    p.t0 = t0;
    auto [qp, qm] = tree_partition(t0, lambda.value(), b);
    p.w = decorated_path_weights(k, qp, qm, b);
    const GaussianRational& app = p.w.A_pp;
    p.bhat = path_transfer(k, b).b_k;
    require(!qm.is_zero(), ErrorKind::ZeroDenominator, "Q0- vanishes");
    p.eps0 = cx_dist((qp / qm).to_cx(), Cx{1, 0});
    p.eps1_bound = Real(k) * pow(Real(4), k) * p.eps0;
    require(!app.is_zero(), ErrorKind::ZeroDenominator, "A++ vanishes");
    p.dev_bhat = cx_dist((p.w.A_mp / app).to_cx(), Cx{to_real(p.bhat), 0});
    p.dev_one = cx_dist((p.w.A_mm / app).to_cx(), Cx{1, 0});
    return p;
}

Graph decorated_path_graph(unsigned k, const RootedTree& t0, std::size_t cap) {
    require(k >= 2, ErrorKind::InvalidArgument, "path needs at least two vertices");
    Graph tree = t0.to_graph(cap);
    Graph g(2);
    int prev = 0;
    for (unsigned i = 2; i < k; ++i) {
        int x = g.add_vertex();
        g.add_edge(prev, x);
        graft(g, x, tree);
        prev = x;
    }
    g.add_edge(prev, 1);
    require(static_cast<std::size_t>(g.num_vertices()) <= cap, ErrorKind::TooLarge, "decorated path too large");
    return g;
}

HTheta build_H_theta(const Graph& g, int u, int v, const HThetaInput& in, unsigned Delta, const UnitPoint& lambda,
                     const mpq_class& b) {
    require(g.weights().empty() && g.pins().empty(), ErrorKind::InvalidArgument, "G must carry no weights or pins");
    require(g.multiplicity(u, v) >= 1, ErrorKind::InvalidArgument, "e is not an edge of G");
    require(g.max_degree() <= 3, ErrorKind::DegreeViolation, "G must have maximum degree at most 3");
    require(Delta >= 3, ErrorKind::DegreeViolation, "Delta must be at least 3");
    require(in.variant == HVariant::Plain || in.t_pi.has_value(), ErrorKind::InvalidArgument,
            "the primed variant needs T_pi");
    auto fits = [&](const RootedTree& t, const char* name) {
        require(t.root_degree() + 2 <= Delta && t.max_degree() <= Delta, ErrorKind::DegreeViolation,
                std::string(name) + " does not fit on a degree-2 vertex");
    };
    fits(in.t_theta, "T_theta");
    if (in.t_pi) fits(*in.t_pi, "T_pi");

    HTheta h;
    h.variant = in.variant;
    h.path = build_decorated_path(in.k, in.t0, Delta, lambda, b);
    h.t_theta = in.t_theta;
    if (in.variant == HVariant::Primed) h.t_pi = in.t_pi;

    Graph H = g;
    H.remove_edge(u, v);
    if (in.variant == HVariant::Plain) {
        h.s = H.add_vertex();
        H.add_edge(u, h.s);
        H.add_edge(h.s, v);
    } else {
        int up = H.add_vertex();
        h.s = H.add_vertex();
        int vp = H.add_vertex();
        H.add_edge(u, up);
        H.add_edge(up, h.s);
        H.add_edge(h.s, vp);
        H.add_edge(vp, v);
        h.pi_vertices = {up, vp};
    }
    h.h = H;
    h.h_vertices = H.num_vertices();
    h.h_edges = H.edge_count();

    h.ideal = H;
    h.ideal.set_weight(h.s, {in.theta_point.value(), GaussianRational(1)});
    for (int x : h.pi_vertices) h.ideal.set_weight(x, {GaussianRational(-1), GaussianRational(1)});

    auto [tp, tm] = tree_partition(in.t_theta, lambda.value(), b);
    h.Q_theta_plus = tp;
    h.Q_theta_minus = tm;
    Graph c(H.num_vertices());
    for (const auto& e : H.edges()) {
        for (unsigned j = 0; j < e.mult; ++j) {
            int prev = e.u;
            for (unsigned i = 2; i < in.k; ++i) {
                int x = c.add_vertex();
                c.set_weight(x, {h.path.w.Q_plus, h.path.w.Q_minus});
                c.add_edge(prev, x);
                prev = x;
            }
            c.add_edge(prev, e.v);
        }
    }
    c.set_weight(h.s, {tp, tm});
    GaussianRational norm = tm * pow(h.path.w.A_pp, h.h_edges);
    if (in.variant == HVariant::Primed) {
        auto [pp, pm] = tree_partition(*in.t_pi, lambda.value(), b);
        for (int x : h.pi_vertices) c.set_weight(x, {pp, pm});
        norm *= pm * pm;
    }
    h.compact = std::move(c);
    h.normalizer = norm;

    const mpz_class m_h = h.h_edges, kk = in.k;
    const mpz_class s0 = in.t0.size(), st = in.t_theta.size();
    const mpz_class sp = in.t_pi ? in.t_pi->size() : mpz_class(1);
    const mpz_class npi = h.pi_vertices.size();
    h.predicted_vertices = h.h_vertices + m_h * (kk - 2) * s0 + (st - 1) + npi * (sp - 1);
    h.predicted_edges = m_h * (kk - 1) + m_h * (kk - 2) * (s0 - 1) + (st - 1) + npi * (sp - 1);
    return h;
}

Graph expand_H_theta(const HTheta& h, std::size_t cap) {
    require(h.predicted_vertices <= mpz_class(static_cast<unsigned long>(cap)), ErrorKind::TooLarge,
            "H_theta has " + h.predicted_vertices.get_str() + " vertices");
    Graph t0 = h.path.t0.to_graph(cap);
    Graph g(h.h.num_vertices());
    for (const auto& e : h.h.edges()) {
        for (unsigned j = 0; j < e.mult; ++j) {
            int prev = e.u;
            for (unsigned i = 2; i < h.path.k; ++i) {
                int x = g.add_vertex();
                graft(g, x, t0);
                g.add_edge(prev, x);
                prev = x;
            }
            g.add_edge(prev, e.v);
        }
    }
    graft(g, h.s, h.t_theta->to_graph(cap));
    if (h.t_pi) {
        Graph tp = h.t_pi->to_graph(cap);
        for (int x : h.pi_vertices) graft(g, x, tp);
    }
    return g;
}

// ---------------------------------------------------------------- bhat

std::string BhatCertificate::to_json() const {
    return json{{"k", k},
                {"bhat", rational_str(bhat)},
                {"n_check", n_check},
                {"graphs_checked", graphs_checked},
                {"min_abs_Z_squared", rational_str(min_norm)},
                {"min_abs_Z", to_string(sqrt(to_real(min_norm)), 20)},
                {"min_graph", json::parse(min_graph.to_json())}}
        .dump(2);
}

BhatCertificate certify_bhat(const UnitPoint& lambda, const mpq_class& bhat, int n_check) {
    require(lambda != UnitPoint::minus_one(), ErrorKind::PreconditionViolated, "lambda = -1 is excluded");
    require(n_check >= 1 && n_check <= 10, ErrorKind::InvalidArgument, "n_check must lie in [1, 10]");
    BhatCertificate c;
    c.bhat = bhat;
    c.n_check = n_check;
    bool first = true;
    for (int n = 1; n <= n_check; ++n) {
        for (const Graph& g : enumerate_graphs(n, GraphFilter{3, true})) {
            GaussianRational z = partition_bruteforce(g, lambda.value(), bhat);
            ++c.graphs_checked;
            if (z.is_zero()) fail(ErrorKind::CertificationFailed, "Z vanishes on " + g.to_json());
            mpq_class nz = z.norm();
            if (first || nz < c.min_norm) {
                c.min_norm = nz;
                c.min_graph = g;
                first = false;
            }
        }
    }
    return c;
}

BhatCertificate select_bhat(unsigned Delta, const mpq_class& b, const UnitPoint& lambda, int n_check,
                            const BhatOptions& opt) {
    require(Delta >= 3, ErrorKind::PreconditionViolated, "Delta must be at least 3");
    require(sgn(b) > 0 && b < 1, ErrorKind::PreconditionViolated, "b must lie in (0,1)");
    require(lambda != UnitPoint::minus_one(), ErrorKind::PreconditionViolated, "lambda = -1 is excluded");
    unsigned k = 0;
    if (opt.k) {
        k = *opt.k;
    } else {
        for (unsigned j = 2; j <= opt.k_max && k == 0; ++j)
            if (1 - path_transfer(j, b).b_k <= opt.gap) k = j;
        if (k == 0) fail(ErrorKind::BudgetExceeded, "no path length up to k_max reaches the gap");
    }
    mpq_class bhat = path_transfer(k, b).b_k;
    BhatCertificate c = certify_bhat(lambda, bhat, n_check);
    c.k = k;
    return c;
}

}  // namespace isingdyn
