#include "isingdyn/dynamics.hpp"
#include "isingdyn/errors.hpp"

#include <algorithm>

namespace isingdyn {

BinaryWord BinaryWord::operator+(const BinaryWord& o) const {
    BinaryWord w = *this;
    w.bits.insert(w.bits.end(), o.bits.begin(), o.bits.end());
    return w;
}

std::string BinaryWord::str() const {
    std::string s;
    for (int b : bits) s += b ? '1' : '0';
    return s;
}

std::pair<mpq_class, mpq_class> word_interval(const mpq_class& alpha, const BinaryWord& w) {
    mpq_class lo = 0, hi = 1, shift = 1 - alpha;
    for (auto it = w.bits.rbegin(); it != w.bits.rend(); ++it) {
        lo = alpha * lo + (*it ? shift : mpq_class(0));
        hi = alpha * hi + (*it ? shift : mpq_class(0));
    }
    return {lo, hi};
}

namespace {

using Iv = std::pair<mpq_class, mpq_class>;

bool meets(const Iv& a, const Iv& b) { return a.first <= b.second && b.first <= a.second; }
Iv sum(const Iv& a, const Iv& b) { return {a.first + b.first, a.second + b.second}; }
Iv twice(const Iv& a) { return {2 * a.first, 2 * a.second}; }

BinaryWord append(const BinaryWord& w, int bit) {
    BinaryWord r = w;
    r.bits.push_back(bit);
    return r;
}

// Worst |(p2-p1)/(p3-p2) - 1| over endpoint choices; negative when intervals overlap.
template <typename T, typename Sub>
T worst_ratio(const std::array<std::pair<T, T>, 3>& iv, Sub) {
    if (!(iv[0].second < iv[1].first && iv[1].second < iv[2].first)) return T(-1);
    T worst = 0;
    for (int m = 0; m < 8; ++m) {
        T p1 = (m & 1) ? iv[0].second : iv[0].first;
        T p2 = (m & 2) ? iv[1].second : iv[1].first;
        T p3 = (m & 4) ? iv[2].second : iv[2].first;
        T r = (p2 - p1) / (p3 - p2) - 1;
        if (r < 0) r = -r;
        if (r > worst) worst = r;
    }
    return worst;
}

struct Plan {
    BinaryWord w1, w2, w3;
    std::vector<std::array<BinaryWord, 3>> levels;
};

// Linear construction with exact arithmetic; stops when the ratio bound holds.
Plan linear_plan(const mpq_class& alpha, const mpq_class& eps, std::size_t max_len) {
    Plan plan;
    if (alpha >= mpq_class(1, 2)) {
        // Pin intervals at 0, 1/2 and 1.
        BinaryWord mid;
        mpq_class half(1, 2);
        for (std::size_t n = 1; n <= max_len; ++n) {
            Iv cur = word_interval(alpha, mid);
            mpq_class len = cur.second - cur.first;
            Iv c0{cur.first, cur.first + alpha * len}, c1{cur.second - alpha * len, cur.second};
            bool in0 = c0.first <= half && half <= c0.second, in1 = c1.first <= half && half <= c1.second;
            int bit = 0;
            if (in0 && in1)
                bit = (half - c1.first) > (c0.second - half) ? 1 : 0;
            else
                bit = in1 ? 1 : 0;
            mid = append(mid, bit);
            BinaryWord zeros{std::vector<int>(n, 0)}, ones{std::vector<int>(n, 1)};
            std::array<Iv, 3> iv{word_interval(alpha, zeros), word_interval(alpha, mid), word_interval(alpha, ones)};
            mpq_class w = worst_ratio(iv, 0);
            if (w >= 0 && w < eps) {
                plan.w1 = zeros;
                plan.w2 = mid;
                plan.w3 = ones;
                return plan;
            }
        }
        fail(ErrorKind::NoConvergence, "near-AP pinning did not reach the bound");
    }
    BinaryWord w1{{0, 0}}, w2{{0, 1}}, w3{{1, 0}};
    plan.levels.push_back({w1, w2, w3});
    for (std::size_t n = 2; n <= max_len; ++n) {
        std::array<Iv, 3> iv{word_interval(alpha, w1), word_interval(alpha, w2), word_interval(alpha, w3)};
        mpq_class w = worst_ratio(iv, 0);
        if (w >= 0 && w < eps) {
            plan.w1 = w1;
            plan.w2 = w2;
            plan.w3 = w3;
            return plan;
        }
        Iv s13 = sum(iv[0], iv[2]);
        bool advanced = false;
        for (int k2 = 0; k2 < 2 && !advanced; ++k2) {
            BinaryWord n2 = append(w2, k2);
            Iv t2 = twice(word_interval(alpha, n2));
            if (!meets(t2, s13)) continue;
            for (auto [k1, k3] : {std::pair{0, 0}, std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
                BinaryWord n1 = append(w1, k1), n3 = append(w3, k3);
                if (!meets(sum(word_interval(alpha, n1), word_interval(alpha, n3)), t2)) continue;
                w1 = n1;
                w2 = n2;
                w3 = n3;
                advanced = true;
                break;
            }
        }
        if (!advanced) fail(ErrorKind::NoConvergence, "near-AP refinement lost the q1 + q3 = 2 q2 invariant");
        plan.levels.push_back({w1, w2, w3});
    }
    fail(ErrorKind::NoConvergence, "near-AP refinement did not reach the bound");
}

std::pair<Real, Real> map_interval(const NearApMaps& maps, const BinaryWord& w) {
    Real lo = 0, hi = 1;
    for (auto it = w.bits.rbegin(); it != w.bits.rend(); ++it) {
        const auto& f = *it ? maps.f1.f : maps.f0.f;
        lo = f(lo);
        hi = f(hi);
    }
    return {lo, hi};
}

}  // namespace

NearApResult near_ap_triple(const mpq_class& alpha, const mpq_class& eps, const std::optional<NearApMaps>& maps) {
    require(alpha >= mpq_class(1, 3) && alpha < 1, ErrorKind::PreconditionViolated, "alpha must lie in [1/3, 1)");
    require(sgn(eps) > 0, ErrorKind::PreconditionViolated, "eps must be positive");
    const std::size_t max_len = 4096;
    NearApResult res;
    if (!maps) {
        Plan plan = linear_plan(alpha, eps, max_len);
        res.w1 = plan.w1;
        res.w2 = plan.w2;
        res.w3 = plan.w3;
        res.levels = plan.levels;
        std::array<Iv, 3> iv{word_interval(alpha, res.w1), word_interval(alpha, res.w2),
                             word_interval(alpha, res.w3)};
        res.worst_ratio_error = to_real(worst_ratio(iv, 0));
        res.delta_estimate = 0;
        return res;
    }
    res.perturbed = true;
    Real a = to_real(alpha), delta = 0;
    const std::size_t grid = 1024;
    for (std::size_t g = 0; g <= grid; ++g) {
        Real x = Real(g) / Real(grid);
        delta = std::max({delta, Real(abs(abs(maps->df0(x)) - a)), Real(abs(abs(maps->df1(x)) - a))});
    }
    res.delta_estimate = delta;
    mpq_class target = eps / 2;
    for (int attempt = 0; attempt < 12; ++attempt, target /= 4) {
        Plan plan = linear_plan(alpha, target, max_len);
        std::array<std::pair<Real, Real>, 3> iv{map_interval(*maps, plan.w1), map_interval(*maps, plan.w2),
                                                map_interval(*maps, plan.w3)};
        Real w = worst_ratio(iv, 0);
        if (w >= 0 && w < to_real(eps)) {
            res.w1 = plan.w1;
            res.w2 = plan.w2;
            res.w3 = plan.w3;
            res.levels = plan.levels;
            res.worst_ratio_error = w;
            return res;
        }
    }
    fail(ErrorKind::NoConvergence, "perturbed maps stay too far from the linear model");
}

}  // namespace isingdyn
