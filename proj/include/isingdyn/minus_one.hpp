#pragma once

#include "isingdyn/exact.hpp"
#include "isingdyn/graph.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isingdyn {

// Sum over spanning subgraphs in which every vertex has odd degree; coeffs[s]
// counts those with s edges (parallel copies are distinct edges).
struct OddSubgraphSum {
    std::vector<mpz_class> coeffs;

    mpz_class total() const;
    mpq_class evaluate(const mpq_class& x) const;
    bool is_zero() const;
    std::string str() const;  // e.g. "2x^2"
};

struct OddSubgraphOptions {
    unsigned max_edges = 48;
    bool parallel = true;
};

// Depth-first over edges with parity pruning; forests are solved by leaf peeling.
// OpenMP over prefix blocks when parallel.
OddSubgraphSum odd_subgraph_polynomial(const Graph& g, const OddSubgraphOptions& opt = {});
// Plain subset enumeration, kept as the reference (at most 26 edges).
OddSubgraphSum odd_subgraph_polynomial_serial(const Graph& g);

// Z_G(-1, b) = (-2)^n ((1+b)/2)^m sum_S ((1-b)/(1+b))^{|S|}.
GaussianRational partition_minusone(const Graph& g, const mpq_class& b, const OddSubgraphOptions& opt = {});

struct MatchingCount {
    mpz_class count;
    std::string fingerprint;  // hash of n and the edge list with multiplicities
};

struct MatchingOptions {
    int max_vertices = 128;
    std::size_t max_states = std::size_t(1) << 22;
};

// Memoized recursion over a breadth-first vertex order; multiplicity-aware.
MatchingCount count_perfect_matchings(const Graph& g, const MatchingOptions& opt = {});
// Perfect matchings counted by how many edges of `marked` (pairs of G) they use.
std::vector<mpz_class> perfect_matchings_by_marked(const Graph& g, const std::vector<std::pair<int, int>>& marked,
                                                   const MatchingOptions& opt = {});
std::string graph_fingerprint(const Graph& g);

struct FisherGadget {
    Graph g;                                     // G'
    std::vector<std::vector<int>> T;             // T_v in G'
    std::vector<std::pair<int, int>> external;   // ex(e) for the i-th edge of G
    std::vector<std::pair<int, int>> internal;   // triangle edges
};

// Degree-3 vertices become triangles; each edge of G lands on distinct triangle corners.
FisherGadget fisher_gadget(const Graph& g);

struct ParallelGadget {
    Graph g;  // G''
    mpz_class p, q;
    std::vector<std::pair<int, int>> bridge;  // (w_e, z_e) for each external edge
    std::vector<std::pair<int, int>> tail;    // (z_e, v) for each external edge
};

// (1-b)/(1+b) = p/q in lowest terms; external edges u-v become u =p= w_e =q= z_e - v.
ParallelGadget parallel_gadget(const FisherGadget& f, const mpq_class& b, unsigned max_bundle = 1000);

// Every edge copy becomes a path of length 3; the result is simple.
Graph three_subdivision(const Graph& g);

// Scalar c with Z_G(-1, b) = c |M'''|: (-2)^n ((1+b)/2)^m q^{-m}.
mpq_class chain_normalizer(int n, unsigned m, const mpq_class& b);

struct IdentityCheck {
    std::string name;
    std::string lhs, rhs;
    bool holds = false;
};

struct MinusOneChain {
    FisherGadget fisher;
    ParallelGadget parallel;
    Graph subdivided;  // G'''
    mpq_class normalizer;
    int q_exponent = 0;  // -m

    // Exact checks of every identity in the chain; the graph sizes must suit count_perfect_matchings.
    std::vector<IdentityCheck> check(const Graph& g, const mpq_class& b, const MatchingOptions& opt = {}) const;
};

MinusOneChain build_minusone_chain(const Graph& g, const mpq_class& b);

struct DegreeReduction {
    Graph g;                                   // G', max degree 3
    std::vector<std::vector<int>> T, T_prime;  // even and odd path positions; T_v = {v} when d_v <= 3
    unsigned exponent = 0;                     // sum over d_v >= 4 of (|T_v| - 1)
    mpq_class c;                               // Z_{G'}(-1, b) = c Z_G(-1, b)
};

// Vertices of degree t >= 4 become paths of 2t-1 (t odd) or 2t-3 (t even) vertices.
DegreeReduction degree_reduce(const Graph& g, const mpq_class& b);

// k = 1 + 2 ceil((m^2 + ln(1/eps)) / (-ln(1-b))).
unsigned pm_path_length(unsigned m, const mpq_class& b, double eps);

struct PmInstance {
    Graph H;
    unsigned k = 0;
    mpq_class b_k;
    mpq_class A_pp;
    mpq_class normalizer;   // A_pp^m 2^n ((1+b_k)/2)^m ((1-b_k)/(1+b_k))^{n/2}
    mpq_class error_bound;  // 2^m (1-b_k)/(1+b_k)
    std::string to_json() const;
};

// Each edge becomes a path on k vertices with a pendant at every internal vertex;
// Z_H(-1, b) / normalizer estimates the number of perfect matchings of g.
PmInstance pm_to_ising_instance(const Graph& g, const mpq_class& b, double eps,
                                std::optional<unsigned> k_override = std::nullopt);

}  // namespace isingdyn
