#include "isingdyn/graph.hpp"

#include "isingdyn/errors.hpp"

#include <algorithm>
#include <functional>
#include <json.hpp>
#include <unordered_set>

namespace isingdyn {

Graph::Graph(int n) : n_(n) { require(n >= 0, ErrorKind::InvalidArgument, "negative vertex count"); }

void Graph::check_vertex(int v) const {
    require(v >= 0 && v < n_, ErrorKind::InvalidArgument, "no vertex " + std::to_string(v));
}

int Graph::add_vertex() { return n_++; }

void Graph::add_edge(int u, int v, unsigned mult) {
    check_vertex(u);
    check_vertex(v);
    require(u != v, ErrorKind::InvalidArgument, "self-loops are not supported");
    if (mult == 0) return;
    if (u > v) std::swap(u, v);
    for (auto& e : edges_)
        if (e.u == u && e.v == v) {
            e.mult += mult;
            return;
        }
    edges_.push_back({u, v, mult});
}

void Graph::remove_edge(int u, int v) {
    if (u > v) std::swap(u, v);
    for (auto it = edges_.begin(); it != edges_.end(); ++it)
        if (it->u == u && it->v == v) {
            if (--it->mult == 0) edges_.erase(it);
            return;
        }
    fail(ErrorKind::InvalidArgument, "no edge {" + std::to_string(u) + "," + std::to_string(v) + "}");
}

unsigned Graph::edge_count() const {
    unsigned m = 0;
    for (const auto& e : edges_) m += e.mult;
    return m;
}

unsigned Graph::multiplicity(int u, int v) const {
    if (u > v) std::swap(u, v);
    for (const auto& e : edges_)
        if (e.u == u && e.v == v) return e.mult;
    return 0;
}

unsigned Graph::degree(int v) const {
    check_vertex(v);
    unsigned d = 0;
    for (const auto& e : edges_)
        if (e.u == v || e.v == v) d += e.mult;
    return d;
}

unsigned Graph::max_degree() const {
    std::vector<unsigned> d(n_, 0);
    for (const auto& e : edges_) {
        d[e.u] += e.mult;
        d[e.v] += e.mult;
    }
    return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

std::vector<std::vector<std::pair<int, unsigned>>> Graph::adjacency() const {
    std::vector<std::vector<std::pair<int, unsigned>>> adj(n_);
    for (const auto& e : edges_) {
        adj[e.u].push_back({e.v, e.mult});
        adj[e.v].push_back({e.u, e.mult});
    }
    return adj;
}

bool Graph::is_connected() const {
    if (n_ <= 1) return true;
    auto adj = adjacency();
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (auto [w, m] : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                ++count;
                stack.push_back(w);
            }
    }
    return count == n_;
}

bool Graph::is_simple() const {
    for (const auto& e : edges_)
        if (e.mult != 1) return false;
    return true;
}

void Graph::pin(int v, int spin) {
    check_vertex(v);
    require(spin == 1 || spin == -1, ErrorKind::InvalidArgument, "spin must be +1 or -1");
    pins_[v] = spin;
}

void Graph::unpin(int v) { pins_.erase(v); }

void Graph::set_field(int v, const GaussianRational& field) { set_weight(v, {field, GaussianRational(1)}); }

void Graph::set_weight(int v, const VertexWeight& w) {
    check_vertex(v);
    weights_[v] = w;
}

int Graph::absorb(const Graph& other) {
    int off = n_;
    n_ += other.n_;
    for (const auto& e : other.edges_) edges_.push_back({e.u + off, e.v + off, e.mult});
    for (const auto& [v, s] : other.pins_) pins_[v + off] = s;
    for (const auto& [v, w] : other.weights_) weights_[v + off] = w;
    return off;
}

bool operator==(const Graph& a, const Graph& b) {
    if (a.n_ != b.n_ || a.pins_ != b.pins_) return false;
    auto norm = [](std::vector<Edge> e) {
        std::sort(e.begin(), e.end(), [](const Edge& x, const Edge& y) {
            return std::tie(x.u, x.v, x.mult) < std::tie(y.u, y.v, y.mult);
        });
        return e;
    };
    auto ea = norm(a.edges_), eb = norm(b.edges_);
    if (ea.size() != eb.size()) return false;
    for (std::size_t i = 0; i < ea.size(); ++i)
        if (ea[i].u != eb[i].u || ea[i].v != eb[i].v || ea[i].mult != eb[i].mult) return false;
    if (a.weights_.size() != b.weights_.size()) return false;
    for (const auto& [v, w] : a.weights_) {
        auto it = b.weights_.find(v);
        if (it == b.weights_.end() || !(it->second.plus == w.plus) || !(it->second.minus == w.minus)) return false;
    }
    return true;
}

std::string Graph::to_json() const {
    nlohmann::ordered_json j;
    std::vector<int> verts(n_);
    for (int v = 0; v < n_; ++v) verts[v] = v;
    j["vertices"] = verts;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : edges_) edges.push_back({e.u, e.v, e.mult});
    j["edges"] = edges;
    if (!pins_.empty()) {
        nlohmann::ordered_json p;
        for (const auto& [v, s] : pins_) p[std::to_string(v)] = s > 0 ? "+" : "-";
        j["pins"] = p;
    }
    nlohmann::ordered_json fields, weights;
    for (const auto& [v, w] : weights_) {
        if (w.minus == GaussianRational(1))
            fields[std::to_string(v)] = w.plus.str();
        else
            weights[std::to_string(v)] = {w.plus.str(), w.minus.str()};
    }
    if (!fields.empty()) j["fields"] = fields;
    if (!weights.empty()) j["weights"] = weights;
    return j.dump();
}

Graph Graph::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("graph JSON: ") + e.what());
    }
    require(j.is_object() && j.contains("vertices"), ErrorKind::InvalidArgument, "graph JSON needs \"vertices\"");
    std::map<std::string, int> index;
    Graph g;
    auto key = [](const nlohmann::json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    for (const auto& v : j["vertices"]) {
        std::string k = key(v);
        require(!index.count(k), ErrorKind::InvalidArgument, "duplicate vertex " + k);
        index[k] = g.add_vertex();
    }
    auto lookup = [&](const std::string& k) {
        auto it = index.find(k);
        require(it != index.end(), ErrorKind::InvalidArgument, "unknown vertex " + k);
        return it->second;
    };
    if (j.contains("edges"))
        for (const auto& e : j["edges"]) {
            require(e.is_array() && (e.size() == 2 || e.size() == 3), ErrorKind::InvalidArgument,
                    "edge must be [u, v] or [u, v, mult]");
            unsigned mult = e.size() == 3 ? e[2].get<unsigned>() : 1u;
            g.add_edge(lookup(key(e[0])), lookup(key(e[1])), mult);
        }
    if (j.contains("pins"))
        for (const auto& [k, s] : j["pins"].items()) {
            std::string sv = s.is_string() ? s.get<std::string>() : s.dump();
            require(sv == "+" || sv == "-" || sv == "1" || sv == "-1", ErrorKind::InvalidArgument, "bad pin " + sv);
            g.pin(lookup(k), (sv == "+" || sv == "1") ? 1 : -1);
        }
    if (j.contains("fields"))
        for (const auto& [k, f] : j["fields"].items()) g.set_field(lookup(k), parse_gaussian(f.get<std::string>()));
    if (j.contains("weights"))
        for (const auto& [k, w] : j["weights"].items()) {
            require(w.is_array() && w.size() == 2, ErrorKind::InvalidArgument, "weight must be [plus, minus]");
            g.set_weight(lookup(k),
                         {parse_gaussian(w[0].get<std::string>()), parse_gaussian(w[1].get<std::string>())});
        }
    return g;
}

Graph empty_graph(int n) { return Graph(n); }

Graph path_graph(int n) {
    Graph g(n);
    for (int v = 0; v + 1 < n; ++v) g.add_edge(v, v + 1);
    return g;
}

Graph cycle_graph(int n) {
    require(n >= 3, ErrorKind::InvalidArgument, "cycle needs at least 3 vertices");
    Graph g = path_graph(n);
    g.add_edge(n - 1, 0);
    return g;
}

Graph complete_graph(int n) {
    Graph g(n);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) g.add_edge(u, v);
    return g;
}

Graph star_graph(int leaves) {
    Graph g(leaves + 1);
    for (int v = 1; v <= leaves; ++v) g.add_edge(0, v);
    return g;
}

namespace {

using Masks = std::vector<std::uint16_t>;
using Cells = std::vector<std::vector<int>>;

// Equitable refinement of an ordered partition; splitting order depends only on the structure.
void refine(const Masks& adj, Cells& cells) {
    bool changed = true;
    while (changed) {
        changed = false;
        Cells next;
        for (const auto& cell : cells) {
            if (cell.size() == 1) {
                next.push_back(cell);
                continue;
            }
            std::vector<std::pair<std::vector<int>, int>> sig;
            for (int v : cell) {
                std::vector<int> s(cells.size());
                for (std::size_t c = 0; c < cells.size(); ++c)
                    for (int w : cells[c]) s[c] += (adj[v] >> w) & 1;
                sig.push_back({std::move(s), v});
            }
            std::sort(sig.begin(), sig.end());
            std::size_t start = next.size();
            for (std::size_t i = 0; i < sig.size(); ++i) {
                if (i == 0 || sig[i].first != sig[i - 1].first) next.push_back({});
                next.back().push_back(sig[i].second);
            }
            if (next.size() - start > 1) changed = true;
        }
        cells = std::move(next);
    }
}

std::uint64_t code_of(const Masks& adj, const std::vector<int>& order) {
    std::uint64_t code = 0;
    int bit = 0;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j, ++bit)
            if ((adj[order[i]] >> order[j]) & 1) code |= std::uint64_t(1) << bit;
    return code;
}

void search(const Masks& adj, Cells cells, std::uint64_t& best, bool& have) {
    refine(adj, cells);
    std::size_t target = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c)
        if (cells[c].size() > 1) {
            target = c;
            break;
        }
    if (target == cells.size()) {
        std::vector<int> order;
        for (const auto& c : cells) order.push_back(c[0]);
        std::uint64_t code = code_of(adj, order);
        if (!have || code > best) best = code;
        have = true;
        return;
    }
    for (int v : cells[target]) {
        Cells next(cells.begin(), cells.begin() + target);
        next.push_back({v});
        std::vector<int> rest;
        for (int w : cells[target])
            if (w != v) rest.push_back(w);
        next.push_back(rest);
        next.insert(next.end(), cells.begin() + target + 1, cells.end());
        search(adj, std::move(next), best, have);
    }
}

std::uint64_t canonical_from_masks(const Masks& adj) {
    int n = static_cast<int>(adj.size());
    Cells cells(1);
    for (int v = 0; v < n; ++v) cells[0].push_back(v);
    if (n == 0) return 0;
    std::uint64_t best = 0;
    bool have = false;
    search(adj, cells, best, have);
    return best;
}

Masks masks_of(const Graph& g) {
    Masks m(g.num_vertices(), 0);
    for (const auto& e : g.edges()) {
        m[e.u] |= std::uint16_t(1u << e.v);
        m[e.v] |= std::uint16_t(1u << e.u);
    }
    return m;
}

}  // namespace

std::uint64_t canonical_code(const Graph& g) {
    require(g.num_vertices() <= 11, ErrorKind::TooLarge, "canonical codes need at most 11 vertices");
    require(g.is_simple(), ErrorKind::InvalidArgument, "canonical codes need a simple graph");
    return canonical_from_masks(masks_of(g));
}

std::vector<Graph> enumerate_graphs(int n, const GraphFilter& filter) {
    require(n >= 0 && n <= 10, ErrorKind::TooLarge, "enumeration supports n <= 10");
    std::vector<Masks> level{Masks{}};
    for (int k = 1; k <= n; ++k) {
        std::vector<Masks> next;
        std::unordered_set<std::uint64_t> seen;
        for (const auto& base : level) {
            int old = k - 1;
            for (unsigned s = 0; s < (1u << old); ++s) {
                if (filter.connected && old > 0 && s == 0) continue;
                if (static_cast<unsigned>(__builtin_popcount(s)) > filter.max_degree) continue;
                bool ok = true;
                for (int w = 0; w < old && ok; ++w)
                    if (((s >> w) & 1) && static_cast<unsigned>(__builtin_popcount(base[w])) + 1 > filter.max_degree)
                        ok = false;
                if (!ok) continue;
                Masks m = base;
                m.push_back(static_cast<std::uint16_t>(s));
                for (int w = 0; w < old; ++w)
                    if ((s >> w) & 1) m[w] |= std::uint16_t(1u << old);
                if (seen.insert(canonical_from_masks(m)).second) next.push_back(std::move(m));
            }
        }
        level = std::move(next);
    }
    std::vector<Graph> out;
    for (const auto& m : level) {
        Graph g(n);
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if ((m[u] >> v) & 1) g.add_edge(u, v);
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace isingdyn
