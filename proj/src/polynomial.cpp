#include "isingdyn/polynomial.hpp"

#include "isingdyn/errors.hpp"

#include <json.hpp>

#include <functional>
#include <map>

namespace isingdyn {

PolyQ::PolyQ(std::vector<mpq_class> coeffs) : c_(std::move(coeffs)) {
    for (auto& c : c_) c.canonicalize();
    trim();
}

void PolyQ::trim() {
    while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
}

PolyQ operator+(const PolyQ& a, const PolyQ& b) {
    std::vector<mpq_class> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return PolyQ(std::move(c));
}

PolyQ operator-(const PolyQ& a, const PolyQ& b) {
    std::vector<mpq_class> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] - b[i];
    return PolyQ(std::move(c));
}

PolyQ operator*(const PolyQ& a, const PolyQ& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<mpq_class> c(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return PolyQ(std::move(c));
}

PolyQ pow(const PolyQ& p, unsigned k) {
    PolyQ r = PolyQ::constant(1), base = p;
    while (k) {
        if (k & 1) r = r * base;
        k >>= 1;
        if (k) base = base * base;
    }
    return r;
}

PolyQ PolyQ::derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<mpq_class> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<unsigned long>(i);
    return PolyQ(std::move(d));
}

PolyQ PolyQ::monic() const {
    if (is_zero()) return {};
    std::vector<mpq_class> c = c_;
    for (auto& x : c) x /= c_.back();
    return PolyQ(std::move(c));
}

GaussianRational PolyQ::eval(const GaussianRational& z) const {
    GaussianRational acc;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + GaussianRational(*it);
    return acc;
}

Cx PolyQ::eval(const Cx& z) const {
    Cx acc{0, 0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + Cx{to_real(*it), 0};
    return acc;
}

std::string PolyQ::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : c_) j.push_back(rational_str(c));
    return nlohmann::json{{"coefficients", j}}.dump();
}

std::pair<PolyQ, PolyQ> divmod(const PolyQ& a, const PolyQ& b) {
    require(!b.is_zero(), ErrorKind::ZeroDenominator, "polynomial division by zero");
    std::vector<mpq_class> r = a.coeffs();
    int db = b.degree();
    if (a.degree() < db) return {PolyQ(), a};
    std::vector<mpq_class> q(a.degree() - db + 1);
    for (int i = a.degree(); i >= db; --i) {
        mpq_class f = r[i] / b.lead();
        q[i - db] = f;
        if (sgn(f) == 0) continue;
        for (int j = 0; j <= db; ++j) r[i - db + j] -= f * b[j];
    }
    r.resize(db);
    return {PolyQ(std::move(q)), PolyQ(std::move(r))};
}

PolyQ gcd(const PolyQ& a, const PolyQ& b) {
    PolyQ x = a, y = b;
    while (!y.is_zero()) {
        PolyQ r = divmod(x, y).second;
        x = std::move(y);
        y = r.monic();
    }
    return x.monic();
}

std::vector<PolyQ> squarefree_decomposition(const PolyQ& p) {
    require(p.degree() >= 1, ErrorKind::InvalidArgument, "need a non-constant polynomial");
    std::vector<PolyQ> out;
    PolyQ f = p.monic(), d = f.derivative();
    PolyQ a = gcd(f, d);
    PolyQ b = divmod(f, a).first, c = divmod(d, a).first;
    PolyQ e = c - b.derivative();
    while (b.degree() >= 1) {
        PolyQ g = gcd(b, e);
        out.push_back(g);
        b = divmod(b, g).first;
        c = divmod(e, g).first;
        e = c - b.derivative();
    }
    while (!out.empty() && out.back().degree() == 0) out.pop_back();
    return out;
}

namespace {

std::vector<PolyRoot> aberth(const PolyQ& p, unsigned mult) {
    const int n = p.degree();
    std::vector<PolyRoot> out;
    if (n < 1) return out;
    PolyQ dp = p.derivative();
    std::vector<Real> absc(n + 1);
    for (int i = 0; i <= n; ++i) absc[i] = abs(to_real(p[i]));
    // Cauchy bound for the starting circle.
    Real radius = 0;
    for (int i = 0; i < n; ++i) radius = std::max(radius, Real(absc[i] / absc[n]));
    radius = (1 + radius) / 2;
    std::vector<Cx> z(n);
    Real tp = 2 * real_pi();
    for (int k = 0; k < n; ++k) z[k] = cx_expi(tp * (Real(k) + Real(0.4)) / Real(n)) * Cx{radius, 0};
    const Real stop = ulp_slack() * 1024;
    for (int it = 0; it < 2000; ++it) {
        Real moved = 0;
        for (int k = 0; k < n; ++k) {
            Cx pv = p.eval(z[k]), dv = dp.eval(z[k]);
            if (cx_abs(pv) == 0) continue;
            Cx ratio = pv / dv;
            Cx sum{0, 0};
            for (int j = 0; j < n; ++j)
                if (j != k) sum = sum + Cx{1, 0} / (z[k] - z[j]);
            Cx corr = ratio / (Cx{1, 0} - ratio * sum);
            z[k] = z[k] - corr;
            moved = std::max(moved, Real(cx_abs(corr) / (1 + cx_abs(z[k]))));
        }
        if (moved < stop) break;
    }
    for (int k = 0; k < n; ++k) {
        PolyRoot r;
        r.value = z[k];
        r.modulus = cx_abs(z[k]);
        Cx pv = p.eval(z[k]), dv = dp.eval(z[k]);
        Real scale = 0, m = 1;
        for (int i = 0; i <= n; ++i, m *= r.modulus) scale += absc[i] * m;
        r.residual = cx_abs(pv) / scale;
        // Some root lies within n |p/p'| of any point.
        r.error = cx_abs(dv) == 0 ? Real(std::numeric_limits<double>::infinity()) : Real(n * cx_abs(pv) / cx_abs(dv));
        r.multiplicity = mult;
        out.push_back(r);
    }
    return out;
}

}  // namespace

std::vector<PolyRoot> polynomial_roots(const PolyQ& p) {
    if (p.degree() < 1) return {};
    std::vector<PolyRoot> out;
    auto parts = squarefree_decomposition(p);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        auto r = aberth(parts[i], static_cast<unsigned>(i + 1));
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

PolyQ partition_polynomial(const Graph& g, const mpq_class& b, const BruteForceOptions& opt) {
    require(g.weights().empty(), ErrorKind::InvalidArgument, "partition polynomial needs unweighted vertices");
    CountTable t = count_configurations(g, opt);
    std::vector<mpq_class> bp(t.edges + 1);
    bp[0] = 1;
    for (unsigned d = 1; d <= t.edges; ++d) bp[d] = bp[d - 1] * b;
    std::vector<mpq_class> c(t.plain + 1);
    for (int p = 0; p <= t.plain; ++p)
        for (unsigned d = 0; d <= t.edges; ++d)
            if (auto n = t.at(0, p, d)) c[p] += bp[d] * static_cast<unsigned long>(n);
    return PolyQ(std::move(c));
}

PolyQ partition_polynomial(const RootedTree& t, const mpq_class& b) {
    using P = std::pair<PolyQ, PolyQ>;
    std::map<const RootedTree::Node*, P> memo;
    PolyQ bb = PolyQ::constant(b);
    std::function<P(const RootedTree::Node*)> rec = [&](const RootedTree::Node* n) {
        auto it = memo.find(n);
        if (it != memo.end()) return it->second;
        PolyQ zp = PolyQ::z(), zm = PolyQ::constant(1);
        for (const auto& [c, k] : n->children) {
            P z = rec(c.get());
            zp = zp * pow(z.first + bb * z.second, k);
            zm = zm * pow(bb * z.first + z.second, k);
        }
        return memo[n] = {zp, zm};
    };
    P z = rec(t.root().get());
    return z.first + z.second;
}

}  // namespace isingdyn
