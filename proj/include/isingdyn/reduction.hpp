#pragma once

#include "isingdyn/exact.hpp"
#include "isingdyn/gadgets.hpp"
#include "isingdyn/graph.hpp"

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace isingdyn {

struct RelaxedOverrides {
    std::optional<mpq_class> epsilon;
    std::optional<mpq_class> kappa;
    std::optional<mpq_class> epsilon0;
};

struct ReductionParams {
    mpq_class K{1001, 1000};
    Real rho;                 // pi / 40
    mpq_class tau{1, 500};
    int n = 0;
    unsigned m = 0;
    unsigned k = 2;
    mpq_class bhat;
    UnitPoint lambda;
    bool relaxed = false;
    mpz_class M;              // 2^n |p|^m (|p'|+|p''|)^n q^{m+n}, common denominator q
    mpz_class M_lattice;      // bound on the components of the scaled numerator and denominator
    mpq_class epsilon, kappa, epsilon2, epsilon1, epsilon0;

    // Constants as in the proof; M from the common denominator of bhat and lambda.
    static ReductionParams paper(int n, unsigned m, unsigned k, const mpq_class& bhat, const UnitPoint& lambda,
                                 bool primed = false);
    // epsilon = 1/(64 M_lattice^4) unless overridden; refuses overrides that break the proof inequalities.
    static ReductionParams relaxed_for(int n, unsigned m, unsigned k, const mpq_class& bhat, const UnitPoint& lambda,
                                       bool primed = false, const RelaxedOverrides& over = {});

    // Rounding bound K = 2 M^2 used for the real and imaginary parts.
    mpz_class rounding_bound() const;
    // Bits of working precision needed to resolve kappa.
    unsigned precision_bits() const;
    // SeparationFailure or PreconditionViolated when an inequality fails.
    void validate() const;
    std::string to_json() const;
};

// Forward error bound eps2 = k 4^k eps0 2^{4n} (2 bhat)^{2m} of a gadget-mode probe.
mpq_class gadget_error_bound(const mpq_class& eps0, int n, unsigned m, unsigned k, const mpq_class& bhat);

enum class NoiseMode { Exact, Factor, Adversarial };
const char* noise_mode_name(NoiseMode m);
NoiseMode parse_noise_mode(const std::string& s);

struct OracleConfig {
    NoiseMode mode = NoiseMode::Exact;
    std::uint64_t seed = 0;
    mpq_class K{1001, 1000};
    double rho = 3.14159265358979323846 / 40;
    bool record = false;  // keep a transcript of every query
};

struct QueryRecord {
    std::size_t index = 0;
    bool is_arg = false;
    double exact = 0;     // |Z| or Arg Z
    double returned = 0;
};

// Noisy access to Z_G(lambda, b). Factor mode returns |Z| K^u and Arg Z + u' rho
// with u, u' uniform in (-1, 1); adversarial mode always uses the extremes,
// alternating in sign between consecutive queries with seeded flips.
// Safe for concurrent queries.
class Oracle {
public:
    Oracle(const UnitPoint& lambda, const mpq_class& b, const OracleConfig& cfg = {});

    const UnitPoint& lambda() const { return lambda_; }
    const mpq_class& b() const { return b_; }
    const OracleConfig& config() const { return cfg_; }

    // Exact Z of g, without noise and without counting as a query.
    GaussianRational evaluate(const Graph& g) const;

    mpq_class norm_query(const Graph& g);
    mpq_class arg_query(const Graph& g);
    // Noise applied to a value the caller evaluated exactly.
    mpq_class norm_of(const Cx& z);
    mpq_class arg_of(const Cx& z);

    std::size_t queries() const;
    std::vector<QueryRecord> transcript() const;
    std::string transcript_json() const;

private:
    double draw();  // in [-1, 1]; caller holds the lock

    UnitPoint lambda_;
    mpq_class b_;
    OracleConfig cfg_;
    mutable std::mutex mu_;
    std::mt19937_64 rng_;
    std::size_t count_ = 0;
    std::vector<QueryRecord> log_;
};

enum class ProbeMode { Ideal, Gadget };

struct GadgetContext {
    unsigned Delta = 3;
    mpq_class b;
    SeedPair seeds;
    RootedTree t0, t_pi;
    FieldOptions field;
};

// Gadget trees for lambda: seeds plus T0 and T_pi at precision eps0.
GadgetContext make_gadget_context(unsigned Delta, const mpq_class& b, const UnitPoint& lambda, const mpq_class& eps0,
                                  const SeedOptions& seed_opt = {});

struct ProbeResponse {
    mpq_class theta;
    Real estimate;                        // g hat or a hat
    std::optional<GaussianRational> t, r; // ground truth, when audited
    std::optional<Cx> g_value;            // t e^{i theta} + r
    bool guarded = true;                  // theta at least kappa from every representative of theta_goal
};

// Estimates |g(theta)| and Arg g(theta) for g(theta) = t e^{i theta} + r, where
// (t, r) belong to G, e = {u, v} (plain) or to its primed variant.
class Probe {
public:
    Probe(const Graph& g, int u, int v, HVariant variant, const ReductionParams& params, Oracle& oracle,
          ProbeMode mode = ProbeMode::Ideal, const GadgetContext* gadget = nullptr, bool audit = true);

    Real norm(const mpq_class& theta);
    Real arg(const mpq_class& theta);
    const ProbeResponse& last() const { return last_; }
    std::size_t calls() const { return calls_; }

    // From the audit values: t, r and theta_goal = Arg(-r/t).
    const std::optional<GaussianRational>& t() const { return t_; }
    const std::optional<GaussianRational>& r() const { return r_; }
    std::optional<Real> theta_goal() const;

private:
    void fill(const mpq_class& theta, const Real& est, const Cx& w);

    Graph g_;
    int u_, v_;
    HVariant variant_;
    const ReductionParams& params_;
    Oracle& oracle_;
    ProbeMode mode_;
    const GadgetContext* gadget_;
    Cx x_, y_;  // ideal: Z = w x + y for the field point w on s
    Real kappa_;
    std::optional<GaussianRational> t_, r_;
    Cx tc_, rc_;
    std::optional<Real> goal_;
    ProbeResponse last_;
    std::size_t calls_ = 0;
};

// A closed interval [start, start + length] of angles, possibly beyond [0, 2pi).
struct AngleInterval {
    mpq_class start;
    mpq_class length;
    mpq_class end() const { return start + length; }
};

using ProbeFn = std::function<Real(const mpq_class&)>;

// Interval of length < 2pi/3 containing a representative of theta_goal,
// from 19 norm estimates at theta = j/3.
AngleInterval locate_interval_norm(const ProbeFn& norm);
// One round on 20 equally spaced points; the result is at most 7/19 as long.
AngleInterval refine_interval_norm(const ProbeFn& norm, const AngleInterval& cur, const mpq_class& kappa);
// One round on the points start + length j/26, j = -1..27; the result is at most a quarter as long.
AngleInterval refine_interval_arg(const ProbeFn& arg, const AngleInterval& cur, const mpq_class& kappa);

enum class SearchKind { Norm, Arg };
const char* search_kind_name(SearchKind s);

struct SearchTrace {
    std::vector<AngleInterval> intervals;
    mpq_class theta_hat;
    std::size_t queries = 0;
};

// Runs the rounds until the interval is at most 100 kappa; theta_hat is its midpoint.
SearchTrace search_theta(const ProbeFn& probe, SearchKind kind, const mpq_class& kappa);

struct RoundingStep {
    mpq_class theta_hat;
    GaussianRational approx;   // rational point near e^{i theta_hat}
    GaussianRational rounded;  // -r/t
};

struct RatioOptions {
    SearchKind search = SearchKind::Norm;
    ProbeMode mode = ProbeMode::Ideal;
    bool paper_constants = false;
    RelaxedOverrides overrides;
    const GadgetContext* gadget = nullptr;
    bool audit = true;
};

struct RatioResult {
    GaussianRational value;  // R (plain) or R' (primed)
    ReductionParams params;
    SearchTrace trace;
    RoundingStep rounding;
    std::optional<Real> theta_goal;  // audit
};

// R_{G,e} (plain) or R'_{G,e} = z--/z++ (primed), exactly.
RatioResult recover_ratio(const Graph& g, int u, int v, HVariant variant, Oracle& oracle, unsigned k,
                          const mpq_class& bhat, const RatioOptions& opt = {});

enum class EdgeCase { ZeroPlusPlus, ZeroMixed, General };
const char* edge_case_name(EdgeCase c);

struct EdgeRatio {
    GaussianRational r_star;  // Z_G / Z_{G - e}
    EdgeCase which = EdgeCase::General;
    std::vector<RatioResult> calls;
};

// r* from r = R_{G,e}; r_prime gives R_{G',e'} and r_double_prime gives R'_{G,e}, each fetched only when needed.
EdgeRatio assemble_edge_ratio(const mpq_class& bhat, const GaussianRational& lambda, const GaussianRational& r,
                              const std::function<GaussianRational()>& r_prime,
                              const std::function<GaussianRational()>& r_double_prime);

EdgeRatio restore_edge_ratio(const Graph& g, int u, int v, Oracle& oracle, unsigned k, const mpq_class& bhat,
                             const RatioOptions& opt = {});

struct OracleRun {
    GaussianRational value;
    std::vector<EdgeRatio> edges;
    std::size_t queries = 0;
    Real worst_theta_error = 0;  // max |theta_hat - theta_goal| / kappa over searches
    std::string to_json() const;
};

// Z_G(lambda, bhat) by telescoping over the edges in the given order (default: stored order).
OracleRun partition_via_oracle(const Graph& g, Oracle& oracle, unsigned k, const mpq_class& bhat,
                               const RatioOptions& opt = {}, const std::vector<int>& edge_order = {});

}  // namespace isingdyn
