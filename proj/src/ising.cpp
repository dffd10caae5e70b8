#include "isingdyn/ising.hpp"

#include "isingdyn/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <functional>
#include <set>

namespace isingdyn {

std::uint64_t CountTable::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

namespace {

struct Layout {
    int n = 0;
    std::vector<int> free;           // summed vertices
    std::vector<int> fixed;          // spin per vertex for pinned ones, 0 otherwise
    std::vector<int> weight_index;   // index into weighted, or -1
    std::vector<std::vector<std::pair<int, unsigned>>> adj;
    CountTable shape;
};

Layout layout_of(const Graph& g, const BruteForceOptions& opt) {
    Layout L;
    L.n = g.num_vertices();
    L.fixed.assign(L.n, 0);
    L.weight_index.assign(L.n, -1);
    for (const auto& [v, s] : g.pins()) L.fixed[v] = s;
    for (const auto& [v, w] : g.weights()) {
        L.weight_index[v] = static_cast<int>(L.shape.weighted.size());
        L.shape.weighted.push_back(v);
    }
    require(L.shape.weighted.size() <= 16, ErrorKind::TooLarge, "more than 16 weighted vertices");
    for (int v = 0; v < L.n; ++v) {
        if (L.weight_index[v] < 0) ++L.shape.plain;
        if (L.fixed[v] == 0) L.free.push_back(v);
    }
    require(static_cast<int>(L.free.size()) <= opt.max_vertices, ErrorKind::TooLarge,
            std::to_string(L.free.size()) + " free vertices exceed the cap " + std::to_string(opt.max_vertices));
    L.shape.edges = g.edge_count();
    L.adj = g.adjacency();
    L.shape.counts.assign((std::size_t(1) << L.shape.weighted.size()) * (L.shape.plain + 1) * (L.shape.edges + 1), 0);
    return L;
}

struct State {
    std::vector<int> spin;
    int p = 0;
    unsigned d = 0;
    unsigned mask = 0;
};

State direct_state(const Layout& L, std::uint64_t bits) {
    State s;
    s.spin.resize(L.n);
    for (int v = 0; v < L.n; ++v) s.spin[v] = L.fixed[v];
    for (std::size_t i = 0; i < L.free.size(); ++i) s.spin[L.free[i]] = ((bits >> i) & 1) ? 1 : -1;
    for (int v = 0; v < L.n; ++v) {
        if (s.spin[v] < 0) continue;
        if (L.weight_index[v] < 0)
            ++s.p;
        else
            s.mask |= 1u << L.weight_index[v];
    }
    for (int v = 0; v < L.n; ++v)
        for (auto [w, m] : L.adj[v])
            if (v < w && s.spin[v] != s.spin[w]) s.d += m;
    return s;
}

void flip(const Layout& L, State& s, int v) {
    for (auto [w, m] : L.adj[v]) {
        if (s.spin[w] == s.spin[v])
            s.d += m;
        else
            s.d -= m;
    }
    s.spin[v] = -s.spin[v];
    int delta = s.spin[v] > 0 ? 1 : -1;
    if (L.weight_index[v] < 0)
        s.p += delta;
    else
        s.mask ^= 1u << L.weight_index[v];
}

}  // namespace

CountTable count_configurations(const Graph& g, const BruteForceOptions& opt) {
    Layout L = layout_of(g, opt);
    const int F = static_cast<int>(L.free.size());
    const int top = F >= 12 ? 6 : 0;
    const int low = F - top;
    const std::int64_t blocks = std::int64_t(1) << top;
    CountTable& out = L.shape;
#pragma omp parallel if (opt.parallel && top > 0)
    {
        std::vector<std::uint64_t> local(out.counts.size(), 0);
#pragma omp for schedule(dynamic)
        for (std::int64_t blk = 0; blk < blocks; ++blk) {
            State s = direct_state(L, std::uint64_t(blk) << low);
            const std::uint64_t steps = std::uint64_t(1) << low;
            for (std::uint64_t i = 0;; ++i) {
                ++local[out.index(s.mask, s.p, s.d)];
                if (i + 1 == steps) break;
                flip(L, s, L.free[__builtin_ctzll(i + 1)]);
            }
        }
#pragma omp critical
        for (std::size_t k = 0; k < local.size(); ++k) out.counts[k] += local[k];
    }
    return out;
}

CountTable count_configurations_serial(const Graph& g, const BruteForceOptions& opt) {
    Layout L = layout_of(g, opt);
    const std::uint64_t total = std::uint64_t(1) << L.free.size();
    for (std::uint64_t x = 0; x < total; ++x) {
        State s = direct_state(L, x);
        ++L.shape.counts[L.shape.index(s.mask, s.p, s.d)];
    }
    return L.shape;
}

GaussianRational evaluate_counts(const CountTable& t, const Graph& g, const GaussianRational& lambda,
                                 const mpq_class& b) {
    require(sgn(b) >= 0, ErrorKind::InvalidArgument, "b must be non-negative");
    mpq_class bc = b;
    bc.canonicalize();
    const mpz_class s = bc.get_num(), u = bc.get_den();
    const unsigned m = t.edges;
    std::vector<mpz_class> coef(m + 1);
    {
        std::vector<mpz_class> sp(m + 1), up(m + 1);
        sp[0] = up[0] = 1;
        for (unsigned d = 1; d <= m; ++d) {
            sp[d] = sp[d - 1] * s;
            up[d] = up[d - 1] * u;
        }
        for (unsigned d = 0; d <= m; ++d) coef[d] = sp[d] * up[m - d];
    }
    GaussianRational z;
    const unsigned masks = 1u << t.weighted.size();
    for (unsigned mask = 0; mask < masks; ++mask) {
        GaussianRational inner;
        bool any = false;
        for (int p = t.plain; p >= 0; --p) {
            mpz_class a = 0;
            for (unsigned d = 0; d <= m; ++d) {
                auto c = t.at(mask, p, d);
                if (c) a += mpz_class(static_cast<unsigned long>(c)) * coef[d];
            }
            inner = inner * lambda + GaussianRational(mpq_class(a));
            any = any || a != 0;
        }
        if (!any) continue;
        GaussianRational w(1);
        for (std::size_t i = 0; i < t.weighted.size(); ++i) {
            const auto& vw = g.weights().at(t.weighted[i]);
            w *= ((mask >> i) & 1) ? vw.plus : vw.minus;
        }
        z += w * inner;
    }
    mpz_class um;
    mpz_pow_ui(um.get_mpz_t(), u.get_mpz_t(), m);
    return mul_rational(z, mpq_class(1) / mpq_class(um));
}

GaussianRational partition_bruteforce(const Graph& g, const GaussianRational& lambda, const mpq_class& b,
                                      const BruteForceOptions& opt) {
    return evaluate_counts(count_configurations(g, opt), g, lambda, b);
}

GaussianRational pinned_partition(const Graph& g, const std::map<int, int>& pins, const GaussianRational& lambda,
                                  const mpq_class& b, const BruteForceOptions& opt) {
    Graph h = g;
    for (const auto& [v, s] : pins) {
        auto it = g.pins().find(v);
        if (it != g.pins().end() && it->second != s) return GaussianRational(0);
        h.pin(v, s);
    }
    return partition_bruteforce(h, lambda, b, opt);
}

PinnedWeights pinned_weights(const Graph& g, int u, int v, const GaussianRational& lambda, const mpq_class& b,
                             const BruteForceOptions& opt) {
    require(u != v, ErrorKind::InvalidArgument, "u and v must differ");
    PinnedWeights w;
    w.z_pp = pinned_partition(g, {{u, 1}, {v, 1}}, lambda, b, opt);
    w.z_pm = pinned_partition(g, {{u, 1}, {v, -1}}, lambda, b, opt);
    w.z_mp = pinned_partition(g, {{u, -1}, {v, 1}}, lambda, b, opt);
    w.z_mm = pinned_partition(g, {{u, -1}, {v, -1}}, lambda, b, opt);
    return w;
}

namespace {

using Pair = std::array<GaussianRational, 2>;  // index 0 is spin +, 1 is spin -
using Mat = std::array<std::array<GaussianRational, 2>, 2>;

Mat transpose(const Mat& m) { return {{{m[0][0], m[1][0]}, {m[0][1], m[1][1]}}}; }

}  // namespace

GaussianRational partition_reduced(const Graph& g, const GaussianRational& lambda, const mpq_class& b,
                                   int max_core) {
    const int n = g.num_vertices();
    std::vector<Pair> w(n, Pair{lambda, GaussianRational(1)});
    for (const auto& [v, vw] : g.weights()) w[v] = {vw.plus, vw.minus};
    for (const auto& [v, s] : g.pins()) w[v][s > 0 ? 1 : 0] = GaussianRational(0);
    std::map<std::pair<int, int>, Mat> mats;
    std::vector<std::set<int>> nb(n);
    for (const auto& e : g.edges()) {
        GaussianRational off(mpq_class(1));
        for (unsigned k = 0; k < e.mult; ++k) off = mul_rational(off, b);
        mats[{e.u, e.v}] = {{{GaussianRational(1), off}, {off, GaussianRational(1)}}};
        nb[e.u].insert(e.v);
        nb[e.v].insert(e.u);
    }
    auto get = [&](int a, int c) { return a < c ? mats.at({a, c}) : transpose(mats.at({c, a})); };
    auto put = [&](int a, int c, const Mat& m) {
        Mat mm = a < c ? m : transpose(m);
        auto key = std::make_pair(std::min(a, c), std::max(a, c));
        auto it = mats.find(key);
        if (it == mats.end()) {
            mats[key] = mm;
            nb[a].insert(c);
            nb[c].insert(a);
        } else {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) it->second[i][j] *= mm[i][j];
        }
    };
    auto drop = [&](int v) {
        for (int u : nb[v]) {
            mats.erase({std::min(u, v), std::max(u, v)});
            nb[u].erase(v);
        }
        nb[v].clear();
    };
    std::vector<char> alive(n, 1);
    GaussianRational factor(1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int v = 0; v < n; ++v) {
            if (!alive[v]) continue;
            if (nb[v].empty()) {
                factor *= w[v][0] + w[v][1];
            } else if (nb[v].size() == 1) {
                int u = *nb[v].begin();
                Mat m = get(u, v);
                for (int su = 0; su < 2; ++su) w[u][su] *= m[su][0] * w[v][0] + m[su][1] * w[v][1];
                drop(v);
            } else if (nb[v].size() == 2) {
                int u = *nb[v].begin(), x = *std::next(nb[v].begin());
                Mat a = get(u, v), c = get(v, x), r;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) r[i][j] = a[i][0] * w[v][0] * c[0][j] + a[i][1] * w[v][1] * c[1][j];
                drop(v);
                put(u, x, r);
            } else {
                continue;
            }
            alive[v] = 0;
            changed = true;
        }
    }
    std::vector<int> core;
    for (int v = 0; v < n; ++v)
        if (alive[v]) core.push_back(v);
    require(static_cast<int>(core.size()) <= max_core, ErrorKind::TooLarge,
            "reduced core has " + std::to_string(core.size()) + " vertices");
    std::vector<int> pos(n, -1);
    for (std::size_t i = 0; i < core.size(); ++i) pos[core[i]] = static_cast<int>(i);
    std::vector<std::vector<std::pair<int, Mat>>> earlier(core.size());
    for (std::size_t i = 0; i < core.size(); ++i)
        for (int u : nb[core[i]])
            if (pos[u] < static_cast<int>(i)) earlier[i].push_back({pos[u], get(u, core[i])});
    std::vector<int> spin(core.size());
    GaussianRational total;
    std::function<void(std::size_t, const GaussianRational&)> rec = [&](std::size_t i, const GaussianRational& acc) {
        if (i == core.size()) {
            total += acc;
            return;
        }
        for (int s = 0; s < 2; ++s) {
            GaussianRational a = acc * w[core[i]][s];
            for (const auto& [j, m] : earlier[i]) {
                if (a.is_zero()) break;
                a *= m[spin[j]][s];
            }
            if (a.is_zero()) continue;
            spin[i] = s;
            rec(i + 1, a);
        }
    };
    rec(0, factor);
    return total;
}

}  // namespace isingdyn
