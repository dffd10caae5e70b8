#pragma once

#include "isingdyn/exact.hpp"
#include "isingdyn/graph.hpp"
#include "isingdyn/ising.hpp"
#include "isingdyn/tree.hpp"

#include <vector>

namespace isingdyn {

// Dense polynomial over Q; coeffs[i] multiplies z^i, no trailing zeros.
class PolyQ {
public:
    PolyQ() = default;
    explicit PolyQ(std::vector<mpq_class> coeffs);
    static PolyQ constant(const mpq_class& c) { return PolyQ({c}); }
    static PolyQ z() { return PolyQ({0, 1}); }

    const std::vector<mpq_class>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
    bool is_zero() const { return c_.empty(); }
    mpq_class operator[](std::size_t i) const { return i < c_.size() ? c_[i] : mpq_class(0); }
    const mpq_class& lead() const { return c_.back(); }

    PolyQ derivative() const;
    PolyQ monic() const;
    GaussianRational eval(const GaussianRational& z) const;
    Cx eval(const Cx& z) const;
    std::string to_json() const;

    friend PolyQ operator+(const PolyQ& a, const PolyQ& b);
    friend PolyQ operator-(const PolyQ& a, const PolyQ& b);
    friend PolyQ operator*(const PolyQ& a, const PolyQ& b);
    friend bool operator==(const PolyQ& a, const PolyQ& b) { return a.c_ == b.c_; }

private:
    void trim();
    std::vector<mpq_class> c_;
};

PolyQ pow(const PolyQ& p, unsigned k);
// Quotient and remainder; ZeroDenominator for a zero divisor.
std::pair<PolyQ, PolyQ> divmod(const PolyQ& a, const PolyQ& b);
// Monic gcd.
PolyQ gcd(const PolyQ& a, const PolyQ& b);

// Square-free factors f_i with p = c * prod f_i^i (Yun); entry i-1 holds f_i.
std::vector<PolyQ> squarefree_decomposition(const PolyQ& p);

struct PolyRoot {
    Cx value;
    Real modulus;
    Real residual;   // |p(z)| relative to sum |a_i| |z|^i, for the square-free factor
    Real error;      // radius of a disc around value known to hold a root
    unsigned multiplicity = 1;
};

// Roots with multiplicity via Yun and Aberth iteration at the current precision.
std::vector<PolyRoot> polynomial_roots(const PolyQ& p);

// Z_G(z, b) as a polynomial in z; vertices carrying weights are not allowed.
PolyQ partition_polynomial(const Graph& g, const mpq_class& b, const BruteForceOptions& opt = {});
// Same for a tree via the (Z+, Z-) recursion, any size.
PolyQ partition_polynomial(const RootedTree& t, const mpq_class& b);

}  // namespace isingdyn
