#pragma once

#include "isingdyn/exact.hpp"
#include "isingdyn/graph.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace isingdyn {

struct BruteForceOptions {
    int max_vertices = 24;  // cap on summed (unpinned) vertices
    bool parallel = true;
};

// Configuration counts of a graph, independent of lambda and b.
// Entry (mask, p, d): configurations whose weighted vertices have spins `mask`
// (bit i set = vertex weighted[i] is +), with p plain vertices at + and d
// disagreeing edges counted with multiplicity. Pins are honoured.
struct CountTable {
    int plain = 0;                // number of default-weight vertices
    unsigned edges = 0;           // edge count with multiplicity
    std::vector<int> weighted;    // vertices carrying a weight override
    std::vector<std::uint64_t> counts;

    std::size_t index(unsigned mask, int p, unsigned d) const {
        return (std::size_t(mask) * (plain + 1) + p) * (edges + 1) + d;
    }
    std::uint64_t at(unsigned mask, int p, unsigned d) const { return counts[index(mask, p, d)]; }
    std::uint64_t total() const;
};

// Gray-code enumeration; OpenMP over configuration blocks when parallel.
CountTable count_configurations(const Graph& g, const BruteForceOptions& opt = {});
// Direct per-configuration recount, kept as the reference implementation.
CountTable count_configurations_serial(const Graph& g, const BruteForceOptions& opt = {});

GaussianRational evaluate_counts(const CountTable& t, const Graph& g, const GaussianRational& lambda,
                                 const mpq_class& b);

GaussianRational partition_bruteforce(const Graph& g, const GaussianRational& lambda, const mpq_class& b,
                                      const BruteForceOptions& opt = {});

// Extra pins are combined with those stored on the graph; a conflicting pin gives 0.
GaussianRational pinned_partition(const Graph& g, const std::map<int, int>& pins, const GaussianRational& lambda,
                                  const mpq_class& b, const BruteForceOptions& opt = {});

struct PinnedWeights {
    GaussianRational z_pp, z_pm, z_mp, z_mm;
};

// The four values of Z with u and v pinned.
PinnedWeights pinned_weights(const Graph& g, int u, int v, const GaussianRational& lambda, const mpq_class& b,
                             const BruteForceOptions& opt = {});

// Exact evaluation that first folds pendant vertices and suppresses degree-2
// vertices, then enumerates the remaining core (at most max_core vertices).
GaussianRational partition_reduced(const Graph& g, const GaussianRational& lambda, const mpq_class& b,
                                   int max_core = 24);

}  // namespace isingdyn
