#include "isingdyn/minus_one.hpp"

#include "isingdyn/errors.hpp"
#include "isingdyn/ising.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isingdyn {

namespace {

mpq_class qpow(const mpq_class& x, long e) {
    mpq_class r = 1;
    mpq_class b = e < 0 ? mpq_class(1 / x) : x;
    for (long i = 0; i < std::labs(e); ++i) r *= b;
    return r;
}

void require_plain(const Graph& g) {
    require(g.pins().empty() && g.weights().empty(), ErrorKind::InvalidArgument, "graph must carry no pins or weights");
}

// Breadth-first order, each component started from a vertex of least degree.
std::vector<int> bfs_order(const Graph& g) {
    const int n = g.num_vertices();
    auto adj = g.adjacency();
    std::vector<int> by_degree(n);
    std::iota(by_degree.begin(), by_degree.end(), 0);
    std::stable_sort(by_degree.begin(), by_degree.end(),
                     [&](int a, int b) { return adj[a].size() < adj[b].size(); });
    std::vector<char> seen(n, 0);
    std::vector<int> order;
    for (int s : by_degree) {
        if (seen[s]) continue;
        std::deque<int> qu{s};
        seen[s] = 1;
        while (!qu.empty()) {
            int v = qu.front();
            qu.pop_front();
            order.push_back(v);
            for (auto [w, m] : adj[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    qu.push_back(w);
                }
        }
    }
    return order;
}

struct OddSearch {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // one entry per copy
    std::vector<int> last;                   // last edge index touching each vertex

    void dfs(std::size_t i, std::vector<char>& par, unsigned size, std::vector<std::uint64_t>& out) const {
        if (i == edges.size()) {
            ++out[size];
            return;
        }
        auto [u, v] = edges[i];
        for (int take = 0; take < 2; ++take) {
            if (take) {
                par[u] ^= 1;
                par[v] ^= 1;
            }
            bool ok = (last[u] != int(i) || par[u]) && (last[v] != int(i) || par[v]);
            if (ok) dfs(i + 1, par, size + take, out);
            if (take) {
                par[u] ^= 1;
                par[v] ^= 1;
            }
        }
    }
};

OddSubgraphSum from_counts(const std::vector<std::uint64_t>& c) {
    OddSubgraphSum s;
    s.coeffs.reserve(c.size());
    for (auto x : c) s.coeffs.emplace_back(mpz_class(std::to_string(x)));
    return s;
}

std::vector<std::pair<int, int>> expanded_edges(const Graph& g) {
    std::vector<std::pair<int, int>> e;
    for (const auto& ed : g.edges())
        for (unsigned k = 0; k < ed.mult; ++k) e.emplace_back(ed.u, ed.v);
    return e;
}

bool is_forest(const Graph& g) {
    if (!g.is_simple()) return false;
    std::vector<int> parent(g.num_vertices());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& e : g.edges()) {
        int a = find(e.u), b = find(e.v);
        if (a == b) return false;
        parent[a] = b;
    }
    return true;
}

// The unique odd subgraph of a forest, if any, by peeling leaves.
OddSubgraphSum forest_odd(const Graph& g) {
    const int n = g.num_vertices();
    auto adj = g.adjacency();
    std::vector<std::set<int>> nb(n);
    for (int v = 0; v < n; ++v)
        for (auto [w, m] : adj[v]) nb[v].insert(w);
    std::vector<char> par(n, 0);
    std::vector<int> leaves;
    for (int v = 0; v < n; ++v)
        if (nb[v].size() == 1) leaves.push_back(v);
    unsigned taken = 0;
    while (!leaves.empty()) {
        int v = leaves.back();
        leaves.pop_back();
        if (nb[v].size() != 1) continue;
        int u = *nb[v].begin();
        if (!par[v]) {
            par[v] ^= 1;
            par[u] ^= 1;
            ++taken;
        }
        nb[v].clear();
        nb[u].erase(v);
        if (nb[u].size() == 1) leaves.push_back(u);
    }
    OddSubgraphSum s;
    s.coeffs.assign(g.edge_count() + 1, 0);
    for (int v = 0; v < n; ++v)
        if (!par[v]) return s;
    s.coeffs[taken] = 1;
    return s;
}

using Key = unsigned __int128;

struct KeyHash {
    std::size_t operator()(Key k) const {
        std::uint64_t lo = std::uint64_t(k), hi = std::uint64_t(k >> 64);
        return std::hash<std::uint64_t>()(lo * 0x9e3779b97f4a7c15ull ^ hi);
    }
};

struct MatchingDp {
    int n = 0;
    // neighbours by position: (position, multiplicity, marked)
    std::vector<std::vector<std::tuple<int, unsigned, int>>> adj;
    Key full = 0;
    std::size_t max_states = 0;
    std::unordered_map<Key, std::vector<mpz_class>, KeyHash> memo;

    static void add_into(std::vector<mpz_class>& acc, const std::vector<mpz_class>& p, unsigned mult, int shift) {
        if (acc.size() < p.size() + shift) acc.resize(p.size() + shift, 0);
        for (std::size_t i = 0; i < p.size(); ++i) acc[i + shift] += p[i] * mult;
    }

    const std::vector<mpz_class>& solve(Key mask) {
        static const std::vector<mpz_class> one{mpz_class(1)};
        if (mask == full) return one;
        auto it = memo.find(mask);
        if (it != memo.end()) return it->second;
        require(memo.size() < max_states, ErrorKind::TooLarge, "perfect matching recursion exceeds the state cap");
        int v = 0;
        while ((mask >> v) & 1) ++v;
        std::vector<mpz_class> acc;
        for (auto [w, mult, marked] : adj[v]) {
            if ((mask >> w) & 1) continue;
            Key next = mask | (Key(1) << v) | (Key(1) << w);
            std::vector<mpz_class> sub = solve(next);  // copy: rehash may move entries
            add_into(acc, sub, mult, marked);
        }
        return memo.emplace(mask, std::move(acc)).first->second;
    }
};

std::vector<mpz_class> matching_polynomial(const Graph& g, const std::vector<std::pair<int, int>>& marked,
                                           const MatchingOptions& opt) {
    const int n = g.num_vertices();
    require(n <= std::min(opt.max_vertices, 128), ErrorKind::TooLarge, "too many vertices for matching counting");
    if (n % 2) return {};
    auto order = bfs_order(g);
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    std::set<std::pair<int, int>> mk;
    for (auto [a, b] : marked) mk.insert({std::min(a, b), std::max(a, b)});
    MatchingDp dp;
    dp.n = n;
    dp.adj.assign(n, {});
    dp.max_states = opt.max_states;
    for (const auto& e : g.edges()) {
        if (e.u == e.v) continue;  // a loop never lies in a matching
        int m = mk.count({std::min(e.u, e.v), std::max(e.u, e.v)}) ? 1 : 0;
        dp.adj[pos[e.u]].emplace_back(pos[e.v], e.mult, m);
        dp.adj[pos[e.v]].emplace_back(pos[e.u], e.mult, m);
    }
    for (const auto& a : dp.adj)
        if (a.empty()) return {};
    dp.full = n == 128 ? ~Key(0) : (Key(1) << n) - 1;
    return dp.solve(0);
}

GaussianRational real_gr(const mpq_class& x) { return GaussianRational(x); }

std::string qstr(const mpq_class& x) { return rational_str(x); }

}  // namespace

mpz_class OddSubgraphSum::total() const {
    mpz_class t = 0;
    for (const auto& c : coeffs) t += c;
    return t;
}

mpq_class OddSubgraphSum::evaluate(const mpq_class& x) const {
    mpq_class r = 0;
    for (std::size_t i = coeffs.size(); i-- > 0;) r = r * x + mpq_class(coeffs[i]);
    return r;
}

bool OddSubgraphSum::is_zero() const {
    return std::all_of(coeffs.begin(), coeffs.end(), [](const mpz_class& c) { return c == 0; });
}

std::string OddSubgraphSum::str() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t s = coeffs.size(); s-- > 0;) {
        if (coeffs[s] == 0) continue;
        if (!first) os << " + ";
        first = false;
        if (s == 0 || coeffs[s] != 1) os << coeffs[s].get_str();
        if (s >= 1) os << "x";
        if (s >= 2) os << "^" << s;
    }
    return first ? "0" : os.str();
}

OddSubgraphSum odd_subgraph_polynomial(const Graph& g, const OddSubgraphOptions& opt) {
    require_plain(g);
    const int n = g.num_vertices();
    const unsigned m = g.edge_count();
    OddSubgraphSum zero;
    zero.coeffs.assign(m + 1, 0);
    if (n % 2) return zero;
    for (int v = 0; v < n; ++v)
        if (g.degree(v) == 0) return zero;
    if (is_forest(g)) return forest_odd(g);
    require(m <= opt.max_edges, ErrorKind::TooLarge, "too many edges for odd-subgraph enumeration");

    auto order = bfs_order(g);
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    OddSearch s;
    s.n = n;
    s.edges = expanded_edges(g);
    std::stable_sort(s.edges.begin(), s.edges.end(), [&](auto a, auto b) {
        return std::max(pos[a.first], pos[a.second]) < std::max(pos[b.first], pos[b.second]);
    });
    s.last.assign(n, -1);
    for (std::size_t i = 0; i < s.edges.size(); ++i) s.last[s.edges[i].first] = s.last[s.edges[i].second] = int(i);

    const unsigned P = std::min<unsigned>(m, opt.parallel ? 12 : 0);
    const long blocks = 1L << P;
    std::vector<std::uint64_t> total(m + 1, 0);
#pragma omp parallel if (opt.parallel)
    {
        std::vector<std::uint64_t> local(m + 1, 0);
        std::vector<char> par(n);
#pragma omp for schedule(dynamic, 16)
        for (long blk = 0; blk < blocks; ++blk) {
            std::fill(par.begin(), par.end(), 0);
            unsigned size = 0;
            bool ok = true;
            for (unsigned i = 0; i < P && ok; ++i) {
                auto [u, v] = s.edges[i];
                if ((blk >> i) & 1) {
                    par[u] ^= 1;
                    par[v] ^= 1;
                    ++size;
                }
                ok = (s.last[u] != int(i) || par[u]) && (s.last[v] != int(i) || par[v]);
            }
            if (ok) {
                std::vector<std::uint64_t> out(m + 1, 0);
                s.dfs(P, par, 0, out);
                for (unsigned k = 0; k + size <= m; ++k) local[k + size] += out[k];
            }
        }
#pragma omp critical
        for (unsigned k = 0; k <= m; ++k) total[k] += local[k];
    }
    return from_counts(total);
}

OddSubgraphSum odd_subgraph_polynomial_serial(const Graph& g) {
    require_plain(g);
    auto edges = expanded_edges(g);
    const unsigned m = edges.size();
    require(m <= 26, ErrorKind::TooLarge, "reference enumeration is limited to 26 edges");
    const int n = g.num_vertices();
    std::vector<std::uint64_t> c(m + 1, 0);
    std::vector<int> deg(n);
    for (std::uint64_t S = 0; S < (std::uint64_t(1) << m); ++S) {
        std::fill(deg.begin(), deg.end(), 0);
        for (unsigned i = 0; i < m; ++i)
            if ((S >> i) & 1) {
                ++deg[edges[i].first];
                ++deg[edges[i].second];
            }
        if (std::all_of(deg.begin(), deg.end(), [](int d) { return d % 2 == 1; })) ++c[__builtin_popcountll(S)];
    }
    return from_counts(c);
}

GaussianRational partition_minusone(const Graph& g, const mpq_class& b, const OddSubgraphOptions& opt) {
    require(b != -1, ErrorKind::InvalidArgument, "b = -1 is excluded");
    OddSubgraphSum s = odd_subgraph_polynomial(g, opt);
    const int n = g.num_vertices();
    const unsigned m = g.edge_count();
    mpq_class v = qpow(mpq_class(-2), n) * qpow((1 + b) / 2, m) * s.evaluate((1 - b) / (1 + b));
    return real_gr(v);
}

std::string graph_fingerprint(const Graph& g) {
    std::vector<std::tuple<int, int, unsigned>> es;
    for (const auto& e : g.edges()) es.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v), e.mult);
    std::sort(es.begin(), es.end());
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(std::uint64_t(g.num_vertices()));
    for (auto [a, b, m] : es) {
        mix(std::uint64_t(a));
        mix(std::uint64_t(b));
        mix(m);
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

MatchingCount count_perfect_matchings(const Graph& g, const MatchingOptions& opt) {
    auto poly = matching_polynomial(g, {}, opt);
    MatchingCount mc;
    mc.count = poly.empty() ? mpz_class(0) : poly[0];
    mc.fingerprint = graph_fingerprint(g);
    return mc;
}

std::vector<mpz_class> perfect_matchings_by_marked(const Graph& g, const std::vector<std::pair<int, int>>& marked,
                                                   const MatchingOptions& opt) {
    return matching_polynomial(g, marked, opt);
}

FisherGadget fisher_gadget(const Graph& g) {
    require_plain(g);
    require(g.is_simple(), ErrorKind::InvalidArgument, "fisher_gadget needs a simple graph");
    require(g.max_degree() <= 3, ErrorKind::DegreeViolation, "fisher_gadget needs maximum degree 3");
    const int n = g.num_vertices();
    FisherGadget f;
    f.T.assign(n, {});
    for (int v = 0; v < n; ++v) {
        if (g.degree(v) == 3) {
            for (int i = 0; i < 3; ++i) f.T[v].push_back(f.g.add_vertex());
            for (int i = 0; i < 3; ++i) {
                int a = f.T[v][i], b = f.T[v][(i + 1) % 3];
                f.g.add_edge(a, b);
                f.internal.emplace_back(std::min(a, b), std::max(a, b));
            }
        } else {
            f.T[v].push_back(f.g.add_vertex());
        }
    }
    std::vector<int> slot(n, 0);
    for (const auto& e : g.edges()) {
        int a = f.T[e.u][f.T[e.u].size() == 3 ? slot[e.u]++ : 0];
        int b = f.T[e.v][f.T[e.v].size() == 3 ? slot[e.v]++ : 0];
        f.g.add_edge(a, b);
        f.external.emplace_back(a, b);
    }
    return f;
}

ParallelGadget parallel_gadget(const FisherGadget& f, const mpq_class& b, unsigned max_bundle) {
    require(b > 0 && b < 1, ErrorKind::InvalidArgument, "parallel_gadget needs b in (0,1)");
    mpq_class ratio = (1 - b) / (1 + b);
    ParallelGadget pg;
    pg.p = ratio.get_num();
    pg.q = ratio.get_den();
    require(pg.p <= max_bundle && pg.q <= max_bundle, ErrorKind::TooLarge, "parallel bundle too large");
    unsigned p = pg.p.get_ui(), q = pg.q.get_ui();
    pg.g = Graph(f.g.num_vertices());
    for (auto [a, c] : f.internal) pg.g.add_edge(a, c);
    for (auto [u, v] : f.external) {
        int w = pg.g.add_vertex(), z = pg.g.add_vertex();
        pg.g.add_edge(u, w, p);
        pg.g.add_edge(w, z, q);
        pg.g.add_edge(z, v);
        pg.bridge.emplace_back(w, z);
        pg.tail.emplace_back(z, v);
    }
    return pg;
}

Graph three_subdivision(const Graph& g) {
    require_plain(g);
    Graph h(g.num_vertices());
    for (const auto& e : g.edges())
        for (unsigned k = 0; k < e.mult; ++k) {
            int x = h.add_vertex(), y = h.add_vertex();
            h.add_edge(e.u, x);
            h.add_edge(x, y);
            h.add_edge(y, e.v);
        }
    require(h.is_simple(), ErrorKind::DegreeViolation, "three_subdivision produced a non-simple graph");
    return h;
}

mpq_class chain_normalizer(int n, unsigned m, const mpq_class& b) {
    mpq_class ratio = (1 - b) / (1 + b);
    return qpow(mpq_class(-2), n) * qpow((1 + b) / 2, m) * qpow(mpq_class(ratio.get_den()), -long(m));
}

MinusOneChain build_minusone_chain(const Graph& g, const mpq_class& b) {
    MinusOneChain c;
    c.fisher = fisher_gadget(g);
    c.parallel = parallel_gadget(c.fisher, b);
    c.subdivided = three_subdivision(c.parallel.g);
    c.normalizer = chain_normalizer(g.num_vertices(), g.edge_count(), b);
    c.q_exponent = -int(g.edge_count());
    return c;
}

std::vector<IdentityCheck> MinusOneChain::check(const Graph& g, const mpq_class& b, const MatchingOptions& opt) const {
    std::vector<IdentityCheck> out;
    auto add = [&](std::string name, const std::string& l, const std::string& r) {
        out.push_back({std::move(name), l, r, l == r});
    };
    const unsigned m = g.edge_count();
    OddSubgraphSum odd = odd_subgraph_polynomial(g);
    mpz_class m1 = count_perfect_matchings(fisher.g, opt).count;
    add("odd subgraphs of G = perfect matchings of G'", odd.total().get_str(), m1.get_str());

    auto by_ex = perfect_matchings_by_marked(fisher.g, fisher.external, opt);
    OddSubgraphSum shaped;
    shaped.coeffs.assign(m + 1, 0);
    for (std::size_t s = 0; s < by_ex.size() && s <= m; ++s) shaped.coeffs[s] = by_ex[s];
    add("odd subgraphs by size = matchings of G' by external edges", odd.str(), shaped.str());

    mpz_class weighted = 0;
    for (std::size_t s = 0; s < shaped.coeffs.size(); ++s) {
        mpz_class ps, qs;
        mpz_pow_ui(ps.get_mpz_t(), parallel.p.get_mpz_t(), s);
        mpz_pow_ui(qs.get_mpz_t(), parallel.q.get_mpz_t(), m - s);
        weighted += shaped.coeffs[s] * ps * qs;
    }
    mpz_class m2 = count_perfect_matchings(parallel.g, opt).count;
    add("|M''| = sum over M' of p^|M' ex| q^(m - |M' ex|)", m2.get_str(), weighted.get_str());

    mpz_class m3 = count_perfect_matchings(subdivided, opt).count;
    add("|M'''| = |M''|", m3.get_str(), m2.get_str());

    GaussianRational z = partition_bruteforce(g, GaussianRational(-1), b);
    add("Z_G(-1,b) = normalizer |M'''|", z.str(), real_gr(normalizer * mpq_class(m3)).str());
    add("Z_G(-1,b) = odd-subgraph formula", z.str(), partition_minusone(g, b).str());
    return out;
}

DegreeReduction degree_reduce(const Graph& g, const mpq_class& b) {
    require_plain(g);
    require(g.is_simple(), ErrorKind::InvalidArgument, "degree_reduce needs a simple graph");
    const int n = g.num_vertices();
    DegreeReduction r;
    r.T.assign(n, {});
    r.T_prime.assign(n, {});
    std::vector<std::vector<int>> slots(n);
    for (int v = 0; v < n; ++v) {
        unsigned t = g.degree(v);
        if (t <= 3) {
            int x = r.g.add_vertex();
            r.T[v] = {x};
            slots[v].assign(t, x);
            continue;
        }
        unsigned len = t % 2 ? 2 * t - 1 : 2 * t - 3;
        std::vector<int> path;
        for (unsigned i = 0; i < len; ++i) path.push_back(r.g.add_vertex());
        for (unsigned i = 0; i + 1 < len; ++i) r.g.add_edge(path[i], path[i + 1]);
        for (unsigned i = 0; i < len; ++i) (i % 2 ? r.T_prime[v] : r.T[v]).push_back(path[i]);
        if (t % 2 == 0) slots[v].push_back(path[0]);  // the endpoint that reaches degree 3
        for (int x : r.T[v]) slots[v].push_back(x);
        r.exponent += r.T[v].size() - 1;
    }
    std::vector<std::size_t> next(n, 0);
    for (const auto& e : g.edges()) r.g.add_edge(slots[e.u][next[e.u]++], slots[e.v][next[e.v]++]);
    r.c = qpow(1 - b * b, r.exponent);
    return r;
}

unsigned pm_path_length(unsigned m, const mpq_class& b, double eps) {
    require(eps > 0 && eps < 1, ErrorKind::InvalidArgument, "eps must lie in (0,1)");
    require(b > 0 && b < 1, ErrorKind::InvalidArgument, "b must lie in (0,1)");
    double x = (double(m) * m + std::log(1 / eps)) / (-std::log1p(-b.get_d()));
    double c = std::ceil(x);
    require(c < 1e6, ErrorKind::TooLarge, "path length too large");
    return 1 + 2 * unsigned(c);
}

std::string PmInstance::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["b_k"] = qstr(b_k);
    j["A_pp"] = qstr(A_pp);
    j["normalizer"] = qstr(normalizer);
    j["error_bound"] = qstr(error_bound);
    j["H_vertices"] = H.num_vertices();
    j["H_edges"] = H.edge_count();
    return j.dump();
}

PmInstance pm_to_ising_instance(const Graph& g, const mpq_class& b, double eps, std::optional<unsigned> k_override) {
    require_plain(g);
    require(g.is_simple(), ErrorKind::InvalidArgument, "pm_to_ising_instance needs a simple graph");
    require(g.max_degree() <= 3, ErrorKind::DegreeViolation, "pm_to_ising_instance needs maximum degree 3");
    require(b > 0 && b < 1, ErrorKind::InvalidArgument, "b must lie in (0,1)");
    require(g.num_vertices() % 2 == 0 && count_perfect_matchings(g).count > 0, ErrorKind::NoPerfectMatching,
            "the graph has no perfect matching");
    const int n = g.num_vertices();
    const unsigned m = g.edge_count();
    PmInstance pi;
    pi.k = k_override ? *k_override : pm_path_length(m, b, eps);
    require(pi.k >= 2, ErrorKind::InvalidArgument, "k must be at least 2");
    const unsigned k = pi.k;
    mpq_class up = qpow(1 + b, k - 1), down = qpow(1 - b, k - 1);
    pi.A_pp = (up + down) / 2 * qpow(1 - b, k - 2);
    pi.b_k = (up - down) / (up + down);
    pi.H = Graph(n);
    for (const auto& e : g.edges()) {
        int prev = e.u;
        for (unsigned i = 1; i + 1 < k; ++i) {
            int w = pi.H.add_vertex(), z = pi.H.add_vertex();
            pi.H.add_edge(prev, w);
            pi.H.add_edge(w, z);
            prev = w;
        }
        pi.H.add_edge(prev, e.v);
    }
    mpq_class nu = (1 - pi.b_k) / (1 + pi.b_k);
    pi.normalizer = qpow(pi.A_pp, m) * qpow(mpq_class(2), n) * qpow((1 + pi.b_k) / 2, m) * qpow(nu, n / 2);
    pi.error_bound = qpow(mpq_class(2), m) * nu;
    return pi;
}

}  // namespace isingdyn
