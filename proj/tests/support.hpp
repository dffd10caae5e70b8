#pragma once

#include "isingdyn/exact.hpp"
#include "isingdyn/graph.hpp"

#include <random>

namespace testsupport {

using namespace isingdyn;

inline mpq_class random_rational(std::mt19937_64& rng, long max_den) {
    std::uniform_int_distribution<long> den(1, max_den);
    long d = den(rng);
    std::uniform_int_distribution<long> num(-4 * d, 4 * d);
    mpq_class q(num(rng), d);
    q.canonicalize();
    return q;
}

inline UnitPoint random_unit_point(std::mt19937_64& rng, long max_den = 50) {
    UnitPoint p = circle_point_from_tan(random_rational(rng, max_den));
    if (rng() & 1) p = p * UnitPoint::minus_one();
    return p;
}

// b in (0,1) with denominator at most max_den.
inline mpq_class random_b(std::mt19937_64& rng, long max_den = 20) {
    std::uniform_int_distribution<long> den(2, max_den);
    long d = den(rng);
    std::uniform_int_distribution<long> num(1, d - 1);
    mpq_class q(num(rng), d);
    q.canonicalize();
    return q;
}

// Sum over every spin assignment, written without any shared code.
inline GaussianRational naive_partition(const Graph& g, const GaussianRational& lambda, const mpq_class& b) {
    int n = g.num_vertices();
    GaussianRational z;
    for (unsigned long x = 0; x < (1ul << n); ++x) {
        bool ok = true;
        for (const auto& [v, s] : g.pins())
            if (((x >> v) & 1) != (s > 0 ? 1u : 0u)) ok = false;
        if (!ok) continue;
        GaussianRational w(1);
        for (int v = 0; v < n; ++v) {
            bool plus = (x >> v) & 1;
            auto it = g.weights().find(v);
            if (it != g.weights().end())
                w *= plus ? it->second.plus : it->second.minus;
            else if (plus)
                w *= lambda;
        }
        for (const auto& e : g.edges())
            if (((x >> e.u) & 1) != ((x >> e.v) & 1))
                for (unsigned k = 0; k < e.mult; ++k) w = mul_rational(w, b);
        z += w;
    }
    return z;
}

inline Graph random_graph(std::mt19937_64& rng, int n, double p, unsigned max_mult = 1) {
    Graph g(n);
    std::uniform_real_distribution<double> u(0, 1);
    for (int a = 0; a < n; ++a)
        for (int c = a + 1; c < n; ++c)
            if (u(rng) < p) g.add_edge(a, c, 1 + static_cast<unsigned>(rng() % max_mult));
    return g;
}

inline Graph random_tree(std::mt19937_64& rng, int n) {
    Graph g(n);
    for (int v = 1; v < n; ++v) g.add_edge(static_cast<int>(rng() % v), v);
    return g;
}

}  // namespace testsupport
