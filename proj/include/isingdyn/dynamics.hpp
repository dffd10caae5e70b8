#pragma once

#include "isingdyn/exact.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace isingdyn {

struct MapParams {
    UnitPoint lambda;
    unsigned k = 1;
    mpq_class b;

    MapParams(UnitPoint lambda, unsigned k, mpq_class b);
};

UnitPoint apply_map(const MapParams& p, const UnitPoint& z);
// f_{lambda,k}(z) for arbitrary Gaussian rationals (lambda off the circle allowed).
GaussianRational apply_map_exact(const GaussianRational& lambda, unsigned k, const mpq_class& b,
                                 const GaussianRational& z);
mpq_class derivative_magnitude(unsigned k, const mpq_class& b, const UnitPoint& z);
Real derivative_magnitude(unsigned k, const mpq_class& b, const Cx& z);

// Lift of f_{lambda,k} to angles: F(phi + 2pi) = F(phi) + 2pi k, strictly increasing.
class AngleMap {
public:
    AngleMap(const Real& arg_lambda, unsigned k, const mpq_class& b);
    AngleMap(const UnitPoint& lambda, unsigned k, const mpq_class& b);

    Real operator()(const Real& phi) const;
    Real derivative(const Real& phi) const;
    // Exact inverse of the lift.
    Real inverse(const Real& psi) const;
    unsigned k() const { return k_; }
    const Real& arg_lambda() const { return arg_lambda_; }

private:
    Real arg_lambda_;
    unsigned k_;
    Real c_;
};

// Lift of z -> Arg((z+b)/(bz+1)) with scale c = (1-b)/(1+b).
Real mobius_angle(const Real& phi, const Real& c);

enum class Stability { Attracting, Parabolic, Repelling };
const char* stability_name(Stability s);

struct FixedPoint {
    std::optional<UnitPoint> exact;
    Real angle;  // in (-pi, pi]
    Cx point;
    Real residual;  // |f(z) - z|
    Real multiplier;
    std::optional<mpq_class> multiplier_exact;
    Stability stability = Stability::Repelling;
};

std::vector<FixedPoint> fixed_points_on_circle(const MapParams& p, const mpq_class& tol);
// R_k(lambda): the attracting or parabolic fixed point, when there is one.
std::optional<FixedPoint> attracting_fixed_point(const MapParams& p, const mpq_class& tol);

struct ThresholdResult {
    bool exists = false;
    mpq_class re_parabolic;  // Re z*, exact
    Cx parabolic_point;
    Cx lambda_k;
    Real arg_lambda_k;  // in [0, pi]
    Real err;
    std::optional<GaussianRational> lambda_k_exact;
};

ThresholdResult lambda_threshold(unsigned k, const mpq_class& b);
bool in_chaotic_regime(unsigned k, const mpq_class& b, const UnitPoint& lambda);

struct MobiusClass {
    enum Kind { Elliptic, Parabolic, Hyperbolic } kind;
    mpq_class trace_sq;
    std::optional<mpq_class> rotation_cos;
};
const char* mobius_kind_name(MobiusClass::Kind k);

MobiusClass mobius_classify(const UnitPoint& lambda, const mpq_class& b);
bool is_rational_rotation(const UnitPoint& lambda, const mpq_class& b);

// Affine points (X, Y) of E_t: Y^2 = X^3 - (t-2)t X^2 + t^2 X with X = m/e^2, |m|, e^2 <= height.
struct CurvePoint {
    mpq_class x;
    mpq_class y;
};
std::vector<CurvePoint> curve_points_bounded(long t, long height);
// Known affine rational points of E_t for t in {1,2,3}.
std::vector<CurvePoint> curve_points_known(long t);

struct OrbitPoint {
    std::size_t step = 0;
    std::optional<UnitPoint> exact;
    Real angle;  // in (-pi, pi]
    Real err;    // bound on the angle error
    Real deriv;  // |f'_k| at the point
};

struct OrbitOptions {
    std::size_t exact_steps = 64;
    std::size_t bit_budget = std::size_t(1) << 16;
    bool exact_only = false;
    unsigned float_bits = 256;
};

std::vector<OrbitPoint> orbit(const MapParams& p, const UnitPoint& z0, std::size_t n,
                              const OrbitOptions& opt = {});
std::string orbit_csv(const std::vector<OrbitPoint>& pts);

struct ExpandingPoint {
    std::size_t m = 0;
    std::optional<UnitPoint> exact;
    Real angle;
    Real deriv;
    std::optional<mpq_class> deriv_exact;
};

ExpandingPoint find_expanding_point(const MapParams& p, const UnitPoint& z0, std::size_t budget = 1000000);

// Orientation-preserving contraction of [lo, hi] into itself.
struct IntervalMap {
    std::function<Real(const Real&)> f;
    std::function<Real(const Real&)> inverse;  // optional; bisection otherwise
};

struct CoverResult {
    std::vector<std::size_t> indices;  // outermost map first
    Real image_lo;
    Real image_hi;
    std::vector<Real> pullback_lengths;
    bool verified = false;
};

struct CoverOptions {
    std::size_t budget = 100000;
    std::size_t grid = 1024;
};

CoverResult cover_and_contract(const std::vector<IntervalMap>& maps, const Real& a_lo, const Real& a_hi,
                               const Real& j_lo, const Real& j_hi, const CoverOptions& opt = {});

enum class CoveringLemma { EasyOdd, EasyEven, ThreeMaps, Remaining };
const char* covering_lemma_name(CoveringLemma l);

struct CoveringCertificate {
    CoveringLemma lemma = CoveringLemma::EasyOdd;
    std::vector<unsigned> degrees;
    std::vector<UnitPoint> parameters;  // field per map
    mpq_class b;
    std::vector<Real> shifts;  // lift offsets making each image start inside the arc
    Real arc_start;                     // lifted angles
    Real arc_end;
    Real arc_length;
    std::vector<Real> image_start;
    std::vector<Real> image_end;
    std::vector<Real> image_lengths;
    std::vector<Real> max_contraction;  // sup of |f'| over the grid
    std::size_t grid = 0;
    bool covers = false;
    bool holds = false;
    std::string verdict;
    std::vector<std::string> hypotheses;

    std::vector<IntervalMap> interval_maps() const;
};

struct CoveringOptions {
    std::size_t grid = 1024;
    mpq_class tol{mpq_class(1, 1000000000) * mpq_class(1, 1000000000) * mpq_class(1, 1000000000)};
};

CoveringCertificate verify_easy_odd(const UnitPoint& xi, unsigned k, const mpq_class& b,
                                    const CoveringOptions& opt = {});
CoveringCertificate verify_easy_even(const UnitPoint& xi1, const UnitPoint& xi2, unsigned k, const mpq_class& b,
                                     const CoveringOptions& opt = {});
CoveringCertificate verify_three_maps(const UnitPoint& xi, unsigned k, const mpq_class& b, unsigned p,
                                      const CoveringOptions& opt = {});
CoveringCertificate verify_remaining(const UnitPoint& xi, unsigned m, const mpq_class& b,
                                     const CoveringOptions& opt = {});

// Points of the semigroup orbit of 1 that land in every delta-window of the certificate arc.
std::vector<Real> dense_orbit_points(const CoveringCertificate& cert, const Real& delta);

struct BinaryWord {
    std::vector<int> bits;

    std::size_t size() const { return bits.size(); }
    BinaryWord operator+(const BinaryWord& o) const;
    std::string str() const;
    friend bool operator==(const BinaryWord& a, const BinaryWord& b) { return a.bits == b.bits; }
};

// phi_omega = phi_{w1} o ... o phi_{wn} for phi_0(x) = a x, phi_1(x) = a x + 1 - a, exact.
std::pair<mpq_class, mpq_class> word_interval(const mpq_class& alpha, const BinaryWord& w);

struct NearApResult {
    BinaryWord w1, w2, w3;
    std::vector<std::array<BinaryWord, 3>> levels;  // refinement history (alpha < 1/2)
    Real worst_ratio_error;
    bool perturbed = false;
    Real delta_estimate;  // sup | |f'| - alpha | over the grid, heuristic
};

struct NearApMaps {
    IntervalMap f0;
    IntervalMap f1;
    std::function<Real(const Real&)> df0;
    std::function<Real(const Real&)> df1;
};

NearApResult near_ap_triple(const mpq_class& alpha, const mpq_class& eps,
                            const std::optional<NearApMaps>& maps = std::nullopt);

}  // namespace isingdyn
