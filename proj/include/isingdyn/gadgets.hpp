#pragma once

#include "isingdyn/dynamics.hpp"
#include "isingdyn/exact.hpp"
#include "isingdyn/graph.hpp"
#include "isingdyn/tree.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isingdyn {

// T2 with k copies of T1 on its root, refusing anything outside the class of
// trees with maximum degree Delta and root degree at most Delta - 1.
RootedTree attach_trees(const RootedTree& t2, const RootedTree& t1, unsigned k, unsigned Delta);
// Throws DegreeViolation unless t has max degree <= Delta and root degree <= Delta - 1.
void check_tree_class(const RootedTree& t, unsigned Delta);

struct SeedOptions {
    std::size_t budget = 200000;  // candidate trees screened
    std::size_t buckets = 2048;   // angular buckets kept in the pool
    double max_multiplier = 0.95;
    std::uint64_t rng_seed = 1;
};

struct SeedPair {
    RootedTree t1, t2;  // root degree 1, Arg xi1 < Arg xi2
    UnitPoint xi1, xi2;
    Real multiplier1, multiplier2;  // |f'_1(R_1(xi_i))|
    Real arc_start, arc_end;        // lifted angles of R_1(xi1), R_1(xi2)
    Real arc_lo_angle;              // lower end of the admissible arc (lambda tilde)
    Real arc_hi_angle;              // arg lambda_1
    std::size_t screened = 0;
    bool conjugated = false;        // search ran for conj(lambda)
};

// PreconditionViolated for lambda = +-1 or Delta < 3; BudgetExceeded when no pair is confirmed.
SeedPair seed_pair_search(unsigned Delta, const mpq_class& b, const UnitPoint& lambda, const SeedOptions& opt = {});

enum class FieldStep { Xi1, Xi2, LambdaD };
const char* field_step_name(FieldStep s);

struct FieldPlan {
    unsigned Delta = 3;
    mpq_class b;
    UnitPoint lambda;
    UnitPoint target;
    mpq_class eps;
    bool trivial = false;       // eps >= 2: the two-vertex path
    UnitPoint inner_target;     // target before the final single-edge attachment
    mpq_class inner_eps;
    RootedTree seed1, seed2;
    Real arc_start, arc_end;
    unsigned N = 0;                     // measured expansion count
    std::optional<unsigned> N_bound;    // closed-form count, when b <= (d-1)/(d+1)
    Real j_lo, j_hi;
    std::vector<FieldStep> script;      // applied in order to the seed tree of xi1
    mpz_class predicted_size;

    std::string to_json() const;
    static FieldPlan from_json(const std::string& text);
};

struct FieldResult {
    RootedTree tree;
    UnitPoint field;
    mpq_class dist_sq;  // |field - target|^2, exact
    FieldPlan plan;
};

struct FieldOptions {
    unsigned max_N = 64;
    unsigned retries = 4;
    std::size_t cover_budget = 100000;
};

// Tree of root degree 1 whose exact field is within eps of target.
FieldResult implement_field(const SeedPair& seeds, unsigned Delta, const mpq_class& b, const UnitPoint& lambda,
                            const UnitPoint& target, const mpq_class& eps, const FieldOptions& opt = {});
RootedTree build_from_plan(const FieldPlan& plan);

struct GadgetWeights {
    GaussianRational Q_plus, Q_minus;  // root-pinned weights of T0
    GaussianRational A_pp, A_pm, A_mp, A_mm;
};

struct DecoratedPath {
    unsigned k = 2;
    RootedTree t0;
    GadgetWeights w;
    mpq_class bhat;        // b_k of the plain path
    Real eps0;             // |field(T0) - 1|
    Real eps1_bound;       // k 4^k eps0
    Real dev_bhat;         // |A_mp / A_pp - bhat|
    Real dev_one;          // |A_mm / A_pp - 1|
};

// A weights of the k-vertex path whose internal vertices carry root-pinned weights (q_plus, q_minus).
GadgetWeights decorated_path_weights(unsigned k, const GaussianRational& q_plus, const GaussianRational& q_minus,
                                     const mpq_class& b);
// Path on k vertices with a copy of T0 on each internal vertex; endpoint
// activities are 1 in the A weights.
DecoratedPath build_decorated_path(unsigned k, const RootedTree& t0, unsigned Delta, const UnitPoint& lambda,
                                   const mpq_class& b);
// The expanded path with endpoints 0 and 1.
Graph decorated_path_graph(unsigned k, const RootedTree& t0, std::size_t cap = 1u << 16);

enum class HVariant { Plain, Primed };

struct HTheta {
    HVariant variant = HVariant::Plain;
    Graph h;                  // G with e subdivided (by s, or by u', s', v')
    Graph compact;            // gadget trees folded into root-pinned vertex weights
    Graph ideal;              // H or H' with field overrides, to be evaluated at bhat
    int s = -1;               // subdivision vertex carrying T_theta (s' for primed)
    std::vector<int> pi_vertices;  // u', v' for primed
    unsigned h_vertices = 0;
    unsigned h_edges = 0;     // m + 1 or m + 3
    mpz_class predicted_vertices, predicted_edges;
    GaussianRational normalizer;  // Q-_theta (Q-_pi)^2 A_pp^{h_edges}
    DecoratedPath path;
    GaussianRational Q_theta_plus, Q_theta_minus;
    std::optional<RootedTree> t_theta, t_pi;
};

struct HThetaInput {
    unsigned k = 2;
    RootedTree t_theta;
    RootedTree t0;
    std::optional<RootedTree> t_pi;  // required for Primed
    UnitPoint theta_point;           // override placed on s in the ideal twin
    HVariant variant = HVariant::Plain;
};

HTheta build_H_theta(const Graph& g, int u, int v, const HThetaInput& in, unsigned Delta, const UnitPoint& lambda,
                     const mpq_class& b);
// H_theta with all trees expanded; TooLarge beyond cap vertices.
Graph expand_H_theta(const HTheta& h, std::size_t cap = 24);

struct BhatCertificate {
    unsigned k = 0;
    mpq_class bhat;
    int n_check = 0;
    std::size_t graphs_checked = 0;
    mpq_class min_norm;       // min |Z_G(lambda, bhat)|^2
    Graph min_graph;
    std::string to_json() const;
};

struct BhatOptions {
    mpq_class gap{1, 20};     // accept the first k with 1 - b_k <= gap
    unsigned k_max = 200;
    std::optional<unsigned> k;  // fixed path length
};

// Zero-freeness over connected graphs with max degree 3 and at most n_check vertices.
BhatCertificate certify_bhat(const UnitPoint& lambda, const mpq_class& bhat, int n_check);
BhatCertificate select_bhat(unsigned Delta, const mpq_class& b, const UnitPoint& lambda, int n_check,
                            const BhatOptions& opt = {});

}  // namespace isingdyn
