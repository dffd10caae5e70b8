#include "doctest.h"
#include "isingdyn/errors.hpp"
#include "isingdyn/gadgets.hpp"
#include "isingdyn/ising.hpp"
#include "support.hpp"

#include <complex>
#include <set>

using namespace isingdyn;
using testsupport::naive_partition;
using testsupport::random_graph;
using testsupport::random_tree;

namespace {

mpq_class q(long n, long d) { return ratio(n, d); }

using C = std::complex<long double>;

C to_c(const GaussianRational& z) { return {mpq_class(z.re).get_d(), mpq_class(z.im).get_d()}; }

// Attracting fixed point of z -> xi (z+b)/(bz+1) by plain iteration, and |f'| there.
long double iterated_multiplier(const UnitPoint& xi, const mpq_class& b) {
    C x = to_c(xi.value()), z = 1;
    long double bb = b.get_d();
    for (int i = 0; i < 20000; ++i) z = x * (z + bb) / (bb * z + 1.0L);
    return (1 - bb * bb) / std::norm(bb * z + 1.0L);
}

// Field as Z+/Z- through the pair recursion.
GaussianRational pair_field(const RootedTree& t, const UnitPoint& lambda, const mpq_class& b) {
    auto [zp, zm] = tree_partition(t, lambda.value(), b);
    return zp / zm;
}

const SeedPair& seeds_i() {
    static const SeedPair s = seed_pair_search(3, q(1, 4), UnitPoint::i_unit());
    return s;
}

// Labelled connected graphs with max degree <= 3, by edge subsets.
template <class F>
void for_each_labelled_subcubic(int n, F&& f) {
    std::vector<std::pair<int, int>> slots;
    for (int a = 0; a < n; ++a)
        for (int c = a + 1; c < n; ++c) slots.push_back({a, c});
    for (unsigned long mask = 0; mask < (1ul << slots.size()); ++mask) {
        Graph g(n);
        for (std::size_t i = 0; i < slots.size(); ++i)
            if ((mask >> i) & 1) g.add_edge(slots[i].first, slots[i].second);
        if (g.max_degree() <= 3 && g.is_connected()) f(g);
    }
}

}  // namespace

TEST_CASE("attach_trees examples") {
    const mpq_class b = q(1, 4);
    const UnitPoint lam = UnitPoint::i_unit();
    RootedTree v = RootedTree::vertex();
    RootedTree p2 = attach_trees(v, v, 1, 3);
    CHECK(p2.size() == 2);
    CHECK(tree_field(p2, lam, b).value() == apply_map_exact(lam.value(), 1, b, lam.value()));
    RootedTree star = attach_trees(v, v, 2, 3);
    CHECK(star.size() == 3);
    CHECK(star.root_degree() == 2);
    CHECK(tree_field(star, lam, b).value() == apply_map_exact(lam.value(), 2, b, lam.value()));
    CHECK(pair_field(star, lam, b) == tree_field(star, lam, b).value());

    CHECK_THROWS_AS(attach_trees(star, v, 1, 3), Error);
    try {
        attach_trees(p2, v, 2, 3);
        FAIL("expected DegreeViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegreeViolation);
    }
    // A child whose root is already full.
    RootedTree wide = attach_trees(v, v, 3, 4);
    CHECK_THROWS_AS(attach_trees(v, wide, 1, 3), Error);
}

TEST_CASE("attach_trees composes fields on random small trees") {
    std::mt19937_64 rng(11);
    const mpq_class b = q(2, 7);
    const UnitPoint lam = testsupport::random_unit_point(rng);
    std::vector<RootedTree> pool{RootedTree::vertex()};
    for (int it = 0; it < 60; ++it) {
        const RootedTree& t2 = pool[rng() % pool.size()];
        const RootedTree& t1 = pool[rng() % pool.size()];
        if (t2.root_degree() >= 2 || t1.size() > 8) continue;
        unsigned k = 1 + rng() % (2 - t2.root_degree());
        RootedTree t = attach_trees(t2, t1, k, 3);
        UnitPoint xi2 = tree_field(t2, lam, b), xi1 = tree_field(t1, lam, b);
        CHECK(tree_field(t, lam, b).value() == apply_map_exact(xi2.value(), k, b, xi1.value()));
        CHECK(t.max_degree() <= 3);
        if (t.size() <= 14) {
            Graph g = t.to_graph();
            Graph gp = g, gm = g;
            gp.pin(0, 1);
            gm.pin(0, -1);
            CHECK(naive_partition(gp, lam.value(), b) / naive_partition(gm, lam.value(), b) ==
                  tree_field(t, lam, b).value());
        }
        pool.push_back(t);
    }
}

TEST_CASE("rooted tree json round trip") {
    const mpq_class b = q(1, 3);
    const UnitPoint lam = UnitPoint::i_unit();
    RootedTree v = RootedTree::vertex();
    RootedTree a = RootedTree::attach(v, v, 2);
    RootedTree t = RootedTree::attach(RootedTree::attach(v, a, 1), a, 1);
    RootedTree back = RootedTree::from_json(t.to_json());
    CHECK(back.size() == t.size());
    CHECK(back.dag_nodes() == t.dag_nodes());
    CHECK(tree_field(back, lam, b) == tree_field(t, lam, b));
    CHECK_THROWS_AS(RootedTree::from_json("{\"nodes\": [{\"children\": [[3, 1]]}], \"root\": 0}"), Error);
}

TEST_CASE("seed pair search for Delta = 3, b = 1/4, lambda = i") {
    const mpq_class b = q(1, 4);
    const SeedPair& s = seeds_i();
    CHECK(s.t1.root_degree() == 1);
    CHECK(s.t2.root_degree() == 1);
    check_tree_class(s.t1, 3);
    check_tree_class(s.t2, 3);
    CHECK(tree_field(s.t1, UnitPoint::i_unit(), b) == s.xi1);
    CHECK(pair_field(s.t2, UnitPoint::i_unit(), b) == s.xi2.value());
    CHECK(s.xi1 != s.xi2);
    CHECK(ccw_less(s.xi1.value(), s.xi2.value()));
    CHECK(sgn(s.xi1.im()) > 0);
    for (auto [xi, m] : {std::pair{s.xi1, s.multiplier1}, std::pair{s.xi2, s.multiplier2}}) {
        long double ref = iterated_multiplier(xi, b);
        CHECK(std::abs(ref - static_cast<long double>(to_double(m))) < 1e-10L);
        CHECK(ref > 0.5L);
        CHECK(ref < 1.0L);
        CHECK_FALSE(in_chaotic_regime(1, b, xi));
    }
    CHECK(s.arc_start < s.arc_end);
    CHECK(verify_easy_even(s.xi1, s.xi2, 1, b).holds);
}

TEST_CASE("seed pair search errors") {
    const mpq_class b = q(1, 4);
    auto kind = [&](const UnitPoint& lam, std::size_t budget) {
        try {
            SeedOptions o;
            o.budget = budget;
            seed_pair_search(3, b, lam, o);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    CHECK(kind(UnitPoint::one(), 1000) == ErrorKind::PreconditionViolated);
    CHECK(kind(UnitPoint::minus_one(), 1000) == ErrorKind::PreconditionViolated);
    CHECK(kind(UnitPoint::i_unit(), 0) == ErrorKind::BudgetExceeded);
}

TEST_CASE("implement_field: trivial precision") {
    const mpq_class b = q(1, 4);
    FieldResult r = implement_field(seeds_i(), 3, b, UnitPoint::i_unit(), UnitPoint::minus_one(), q(2, 1));
    CHECK(r.plan.trivial);
    CHECK(r.tree.size() == 2);
    CHECK(r.tree.root_degree() == 1);
    CHECK(r.dist_sq <= 4);
}

TEST_CASE("implement_field: T_pi at eps 1e-2") {
    const mpq_class b = q(1, 4), eps = q(1, 100);
    const UnitPoint lam = UnitPoint::i_unit();
    FieldResult r = implement_field(seeds_i(), 3, b, lam, UnitPoint::minus_one(), eps);
    CHECK(r.tree.root_degree() == 1);
    CHECK(r.tree.max_degree() <= 3);
    CHECK(r.tree.size() == r.plan.predicted_size);
    GaussianRational f = pair_field(r.tree, lam, b);
    CHECK(f == r.field.value());
    CHECK((f + GaussianRational(1)).norm() <= eps * eps);
    CHECK(r.plan.N >= 1);

    // The plan alone rebuilds the same tree.
    FieldPlan back = FieldPlan::from_json(r.plan.to_json());
    CHECK(back.script == r.plan.script);
    RootedTree rebuilt = build_from_plan(back);
    CHECK(rebuilt.size() == r.tree.size());
    CHECK(tree_field(rebuilt, lam, b) == r.field);
}

TEST_CASE("implement_field: T0 near 1 and assorted targets") {
    const mpq_class b = q(1, 4);
    const UnitPoint lam = UnitPoint::i_unit();
    std::mt19937_64 rng(5);
    std::vector<std::pair<UnitPoint, mpq_class>> cases{{UnitPoint::one(), q(1, 1000)},
                                                       {lam, q(1, 1000)},
                                                       {lam.conj(), q(1, 100000)}};
    for (int i = 0; i < 4; ++i) cases.push_back({testsupport::random_unit_point(rng), q(1, 10000)});
    for (const auto& [target, eps] : cases) {
        FieldResult r = implement_field(seeds_i(), 3, b, lam, target, eps);
        CHECK(r.tree.root_degree() == 1);
        check_tree_class(r.tree, 3);
        CHECK(r.tree.size() == r.plan.predicted_size);
        // Size of the N-fold star expansion of the pre-expansion tree, plus the final root.
        mpz_class s = r.plan.seed1.size();
        for (auto st : r.plan.script) {
            if (st == FieldStep::Xi1) s += r.plan.seed1.size();
            if (st == FieldStep::Xi2) s += r.plan.seed2.size();
            if (st == FieldStep::LambdaD) s = 2 * s + 1;
        }
        CHECK(s + 1 == r.tree.size());
        GaussianRational diff = pair_field(r.tree, lam, b) - target.value();
        CHECK(diff.norm() <= eps * eps);
    }
}

TEST_CASE("implement_field in the lower half-plane") {
    const mpq_class b = q(1, 4);
    const UnitPoint lam = UnitPoint::i_unit().conj();
    SeedPair s = seed_pair_search(3, b, lam);
    CHECK(s.conjugated);
    FieldResult r = implement_field(s, 3, b, lam, UnitPoint::minus_one(), q(1, 100));
    CHECK((pair_field(r.tree, lam, b) + GaussianRational(1)).norm() <= q(1, 10000));
    CHECK_THROWS_AS(implement_field(seeds_i(), 3, b, lam, UnitPoint::minus_one(), q(1, 100)), Error);
}

TEST_CASE("implement_field for Delta = 4") {
    const mpq_class b = q(1, 3);
    const UnitPoint lam = circle_point_from_tan(q(2, 3));
    SeedPair s = seed_pair_search(4, b, lam);
    FieldResult r = implement_field(s, 4, b, lam, UnitPoint::one(), q(1, 1000));
    CHECK(r.tree.root_degree() == 1);
    CHECK(r.tree.max_degree() <= 4);
    CHECK(r.tree.size() == r.plan.predicted_size);
    CHECK((pair_field(r.tree, lam, b) - GaussianRational(1)).norm() <= q(1, 1000000));
}

TEST_CASE("decorated path weights") {
    const mpq_class b = q(1, 4);
    SUBCASE("k = 2 is a plain edge") {
        GadgetWeights w = decorated_path_weights(2, GaussianRational(5), GaussianRational(3), b);
        CHECK(w.A_pp == GaussianRational(1));
        CHECK(w.A_mm == GaussianRational(1));
        CHECK(w.A_pm == GaussianRational(b));
        CHECK(w.A_mp == GaussianRational(b));
    }
    SUBCASE("field exactly 1 gives exact ratios") {
        GaussianRational c(mpq_class(3, 5), mpq_class(-4, 7));
        for (unsigned k = 2; k <= 7; ++k) {
            GadgetWeights w = decorated_path_weights(k, c, c, b);
            mpq_class bk = path_transfer(k, b).b_k;
            CHECK(w.A_mp / w.A_pp == GaussianRational(bk));
            CHECK(w.A_mm / w.A_pp == GaussianRational(1));
            CHECK(w.A_pm == w.A_mp);
        }
    }
    SUBCASE("A weights agree with pinned enumeration of the expanded path") {
        std::mt19937_64 rng(3);
        const UnitPoint lam = UnitPoint::i_unit();
        for (int it = 0; it < 12; ++it) {
            int n0 = 1 + static_cast<int>(rng() % 4);
            Graph tg = random_tree(rng, n0);
            RootedTree t0 = RootedTree::from_graph(tg, 0);
            if (t0.root_degree() > 1 || t0.max_degree() > 3) continue;
            unsigned k = 2 + rng() % 3;
            DecoratedPath p = build_decorated_path(k, t0, 3, lam, b);
            Graph g = decorated_path_graph(k, t0);
            g.set_weight(0, {GaussianRational(1), GaussianRational(1)});
            g.set_weight(1, {GaussianRational(1), GaussianRational(1)});
            auto pinned = [&](int a, int c) {
                Graph h = g;
                h.pin(0, a);
                h.pin(1, c);
                return naive_partition(h, lam.value(), b);
            };
            CHECK(pinned(1, 1) == p.w.A_pp);
            CHECK(pinned(1, -1) == p.w.A_pm);
            CHECK(pinned(-1, 1) == p.w.A_mp);
            CHECK(pinned(-1, -1) == p.w.A_mm);
            CHECK(g.max_degree() <= 3);
        }
    }
}

TEST_CASE("decorated path error stays within the propagated bound") {
    const mpq_class b = q(1, 4);
    const UnitPoint lam = UnitPoint::i_unit();
    FieldResult t6 = implement_field(seeds_i(), 3, b, lam, UnitPoint::one(), q(1, 1000000));
    DecoratedPath p3 = build_decorated_path(3, t6.tree, 3, lam, b);
    CHECK(p3.eps0 <= Real(1e-6));
    CHECK(p3.dev_bhat <= p3.eps1_bound);
    CHECK(p3.dev_one <= p3.eps1_bound);
    FieldResult t3 = implement_field(seeds_i(), 3, b, lam, UnitPoint::one(), q(1, 1000));
    for (unsigned k = 2; k <= 8; ++k) {
        DecoratedPath p = build_decorated_path(k, t3.tree, 3, lam, b);
        CHECK(p.dev_bhat <= p.eps1_bound);
        CHECK(p.dev_one <= p.eps1_bound);
        CHECK(p.bhat == path_transfer(k, b).b_k);
    }
    RootedTree wide = RootedTree::attach(RootedTree::vertex(), RootedTree::vertex(), 2);
    CHECK_THROWS_AS(build_decorated_path(3, wide, 3, lam, b), Error);
}

TEST_CASE("H_theta structure") {
    const mpq_class b = q(1, 4);
    const UnitPoint lam = UnitPoint::i_unit();
    RootedTree v = RootedTree::vertex();
    SUBCASE("K2 with plain edges and a one-vertex T_theta") {
        HThetaInput in;
        in.k = 2;
        in.t_theta = v;
        in.t0 = v;
        HTheta h = build_H_theta(complete_graph(2), 0, 1, in, 3, lam, b);
        CHECK(h.predicted_vertices == 3);
        CHECK(h.predicted_edges == 2);
        Graph full = expand_H_theta(h);
        CHECK(full.num_vertices() == 3);
        CHECK(full.edge_count() == 2);
        CHECK(h.h_edges == 2);
    }
    SUBCASE("counts, degrees and evaluation against the expanded graph") {
        std::mt19937_64 rng(21);
        RootedTree p2 = RootedTree::attach(v, v, 1);
        RootedTree p3 = RootedTree::attach(v, p2, 1);
        std::vector<RootedTree> trees{v, p2, p3};
        int done = 0;
        for (int it = 0; it < 200 && done < 25; ++it) {
            int n = 2 + static_cast<int>(rng() % 3);
            Graph g = random_graph(rng, n, 0.7);
            if (g.edges().empty() || g.max_degree() > 3) continue;
            const Edge e = g.edges()[rng() % g.edges().size()];
            HThetaInput in;
            in.k = 2 + rng() % 2;
            in.t_theta = trees[rng() % 3];
            in.t0 = trees[rng() % 2];
            in.t_pi = trees[rng() % 3];
            in.theta_point = UnitPoint::minus_one();
            in.variant = rng() & 1 ? HVariant::Primed : HVariant::Plain;
            HTheta h = build_H_theta(g, e.u, e.v, in, 3, lam, b);
            if (h.predicted_vertices > 18) continue;
            Graph full = expand_H_theta(h);
            CHECK(full.num_vertices() == h.predicted_vertices.get_si());
            CHECK(full.edge_count() == h.predicted_edges.get_ui());
            CHECK(full.max_degree() <= 3);
            CHECK(partition_reduced(h.compact, lam.value(), b) == naive_partition(full, lam.value(), b));
            // The primed variant adds u', v' and two T_pi copies.
            if (in.variant == HVariant::Primed) {
                HThetaInput plain = in;
                plain.variant = HVariant::Plain;
                HTheta hp = build_H_theta(g, e.u, e.v, plain, 3, lam, b);
                mpz_class extra = 2 + 2 * mpz_class(in.k - 2) * in.t0.size() + 2 * (in.t_pi->size() - 1);
                CHECK(h.predicted_vertices - hp.predicted_vertices == extra);
            }
            ++done;
        }
        CHECK(done >= 10);
    }
    SUBCASE("degree-3 endpoints are fine, degree-4 graphs are not") {
        HThetaInput in;
        in.k = 3;
        in.t_theta = v;
        in.t0 = RootedTree::attach(v, v, 1);
        HTheta h = build_H_theta(complete_graph(4), 0, 1, in, 3, lam, b);
        CHECK(expand_H_theta(h, 64).max_degree() <= 3);
        CHECK_THROWS_AS(build_H_theta(star_graph(4), 0, 1, in, 3, lam, b), Error);
        in.variant = HVariant::Primed;
        CHECK_THROWS_AS(build_H_theta(complete_graph(3), 0, 1, in, 3, lam, b), Error);
    }
}

TEST_CASE("H_theta with an exact unit field matches the ideal twin") {
    const mpq_class b = q(1, 4);
    const UnitPoint lam = UnitPoint::i_unit();
    // A one-vertex tree at activity lambda is an exact field lambda on s.
    RootedTree v = RootedTree::vertex();
    HThetaInput in;
    in.k = 2;
    in.t_theta = v;
    in.t0 = v;
    in.t_pi = v;
    in.theta_point = lam;
    for (auto var : {HVariant::Plain, HVariant::Primed}) {
        in.variant = var;
        HTheta h = build_H_theta(cycle_graph(4), 0, 1, in, 3, lam, b);
        Graph ideal = h.ideal;
        for (int x : h.pi_vertices) ideal.set_weight(x, {lam.value(), GaussianRational(1)});
        CHECK(partition_reduced(h.compact, lam.value(), b) / h.normalizer ==
              naive_partition(ideal, lam.value(), path_transfer(2, b).b_k));
    }
}

TEST_CASE("select_bhat") {
    SUBCASE("b = 1/2, k = 5") {
        BhatOptions o;
        o.k = 5;
        BhatCertificate c = select_bhat(3, q(1, 2), UnitPoint::i_unit(), 3, o);
        CHECK(c.bhat == q(40, 41));
        CHECK(c.k == 5);
    }
    SUBCASE("n_check = 1") {
        UnitPoint lam = circle_point_from_tan(q(1, 3));
        BhatCertificate c = select_bhat(3, q(1, 4), lam, 1);
        CHECK(c.graphs_checked == 1);
        CHECK(c.min_norm == (lam.value() + GaussianRational(1)).norm());
        CHECK(1 - c.bhat <= q(1, 20));
        CHECK(1 - path_transfer(c.k - 1, q(1, 4)).b_k > q(1, 20));
    }
    SUBCASE("lambda = -1") {
        try {
            select_bhat(3, q(1, 4), UnitPoint::minus_one(), 4);
            FAIL("expected PreconditionViolated");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::PreconditionViolated);
        }
    }
    SUBCASE("a zero of K2 is reported") {
        // lambda^2 + 2 (3/5) lambda + 1 vanishes at -3/5 + 4i/5.
        UnitPoint lam(q(-3, 5), q(4, 5));
        try {
            certify_bhat(lam, q(3, 5), 3);
            FAIL("expected CertificationFailed");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::CertificationFailed);
        }
    }
    SUBCASE("minimum agrees with a labelled re-enumeration") {
        UnitPoint lam = UnitPoint::i_unit();
        BhatCertificate c = select_bhat(3, q(1, 4), lam, 5);
        mpq_class best = -1;
        std::size_t labelled = 0;
        for (int n = 1; n <= 5; ++n)
            for_each_labelled_subcubic(n, [&](const Graph& g) {
                mpq_class z = naive_partition(g, lam.value(), c.bhat).norm();
                if (best < 0 || z < best) best = z;
                ++labelled;
            });
        CHECK(best == c.min_norm);
        CHECK(labelled > c.graphs_checked);
        CHECK(c.graphs_checked == 1 + 1 + 2 + 6 + 10);
    }
}
