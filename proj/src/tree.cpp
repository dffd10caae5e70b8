#include "isingdyn/tree.hpp"

#include "isingdyn/errors.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <sstream>

namespace isingdyn {

using Node = RootedTree::Node;
using NodePtr = RootedTree::NodePtr;

RootedTree::RootedTree() {
    auto n = std::make_shared<Node>();
    n->size = 1;
    root_ = std::move(n);
}

RootedTree RootedTree::attach(const RootedTree& t2, const RootedTree& t1, unsigned k) {
    auto n = std::make_shared<Node>(*t2.root_);
    if (k == 0) return RootedTree(std::move(n));
    n->children.push_back({t1.root_, k});
    n->size += t1.root_->size * k;
    n->root_degree += k;
    return RootedTree(std::move(n));
}

RootedTree RootedTree::from_graph(const Graph& g, int r) {
    require(g.is_simple(), ErrorKind::InvalidArgument, "tree must be simple");
    require(g.num_vertices() >= 1 && g.edge_count() + 1 == static_cast<unsigned>(g.num_vertices()) &&
                g.is_connected(),
            ErrorKind::InvalidArgument, "graph is not a tree");
    require(r >= 0 && r < g.num_vertices(), ErrorKind::InvalidArgument, "root out of range");
    auto adj = g.adjacency();
    std::function<NodePtr(int, int)> build = [&](int v, int parent) {
        auto n = std::make_shared<Node>();
        n->size = 1;
        for (auto [w, m] : adj[v]) {
            if (w == parent) continue;
            NodePtr c = build(w, v);
            n->size += c->size;
            n->children.push_back({std::move(c), 1});
            ++n->root_degree;
        }
        return NodePtr(n);
    };
    return RootedTree(build(r, -1));
}

unsigned RootedTree::max_degree() const {
    std::map<const Node*, unsigned> memo;  // max degree below, counting parent edges
    std::function<unsigned(const Node*)> rec = [&](const Node* n) {
        auto it = memo.find(n);
        if (it != memo.end()) return it->second;
        unsigned best = 0;
        for (const auto& [c, k] : n->children) best = std::max({best, rec(c.get()), c->root_degree + 1});
        memo[n] = best;
        return best;
    };
    return std::max(rec(root_.get()), root_->root_degree);
}

std::size_t RootedTree::dag_nodes() const {
    std::map<const Node*, bool> seen;
    std::function<void(const Node*)> rec = [&](const Node* n) {
        if (seen[n]) return;
        seen[n] = true;
        for (const auto& [c, k] : n->children) rec(c.get());
    };
    rec(root_.get());
    return seen.size();
}

Graph RootedTree::to_graph(std::size_t cap) const {
    require(root_->size <= mpz_class(static_cast<unsigned long>(cap)), ErrorKind::TooLarge,
            "tree has " + root_->size.get_str() + " vertices");
    Graph g(1);
    std::function<void(const Node*, int)> rec = [&](const Node* n, int v) {
        for (const auto& [c, k] : n->children)
            for (unsigned j = 0; j < k; ++j) {
                int w = g.add_vertex();
                g.add_edge(v, w);
                rec(c.get(), w);
            }
    };
    rec(root_.get(), 0);
    return g;
}

namespace {

using ZPair = std::pair<GaussianRational, GaussianRational>;

ZPair partition_memo(const Node* n, const GaussianRational& lambda, const mpq_class& b,
                     std::map<const Node*, ZPair>& memo) {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    GaussianRational zp = lambda, zm(1);
    for (const auto& [c, k] : n->children) {
        ZPair z = partition_memo(c.get(), lambda, b, memo);
        zp *= pow(z.first + mul_rational(z.second, b), k);
        zm *= pow(mul_rational(z.first, b) + z.second, k);
    }
    return memo[n] = {zp, zm};
}

}  // namespace

std::pair<GaussianRational, GaussianRational> tree_partition(const RootedTree& t, const GaussianRational& lambda,
                                                             const mpq_class& b) {
    std::map<const Node*, ZPair> memo;
    return partition_memo(t.root().get(), lambda, b, memo);
}

GaussianRational tree_field_value(const RootedTree& t, const GaussianRational& lambda, const mpq_class& b) {
    std::map<const Node*, GaussianRational> memo;
    std::function<GaussianRational(const Node*)> rec = [&](const Node* n) {
        auto it = memo.find(n);
        if (it != memo.end()) return it->second;
        GaussianRational xi = lambda;
        for (const auto& [c, k] : n->children) {
            GaussianRational x = rec(c.get());
            GaussianRational den = mul_rational(x, b) + GaussianRational(1);
            require(!den.is_zero(), ErrorKind::ZeroDenominator, "Z_{T,-r} vanishes");
            xi *= pow((x + GaussianRational(b)) / den, k);
        }
        return memo[n] = xi;
    };
    return rec(t.root().get());
}

UnitPoint tree_field(const RootedTree& t, const UnitPoint& lambda, const mpq_class& b) {
    return UnitPoint(tree_field_value(t, lambda.value(), b));
}

std::string RootedTree::to_dot(const GaussianRational& lambda, const mpq_class& b) const {
    std::map<const Node*, ZPair> memo;
    partition_memo(root_.get(), lambda, b, memo);
    std::map<const Node*, int> id;
    std::ostringstream os;
    os << "digraph tree {\n";
    std::function<void(const Node*)> rec = [&](const Node* n) {
        if (id.count(n)) return;
        int me = static_cast<int>(id.size());
        id[n] = me;
        const auto& z = memo.at(n);
        os << "  n" << me << " [label=\"size " << n->size.get_str() << "\\nZ+ = " << z.first.str()
           << "\\nZ- = " << z.second.str() << "\"];\n";
        for (const auto& [c, k] : n->children) {
            rec(c.get());
            os << "  n" << me << " -> n" << id[c.get()] << " [label=\"x" << k << "\"];\n";
        }
    };
    rec(root_.get());
    os << "}\n";
    return os.str();
}

std::string RootedTree::to_json() const {
    std::map<const Node*, std::size_t> id;
    nlohmann::json nodes = nlohmann::json::array();
    std::function<std::size_t(const Node*)> rec = [&](const Node* n) {
        auto it = id.find(n);
        if (it != id.end()) return it->second;
        nlohmann::json ch = nlohmann::json::array();
        for (const auto& [c, k] : n->children) ch.push_back({rec(c.get()), k});
        nodes.push_back({{"children", ch}});
        return id[n] = nodes.size() - 1;
    };
    std::size_t r = rec(root_.get());
    return nlohmann::json{{"nodes", nodes}, {"root", r}}.dump();
}

RootedTree RootedTree::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("tree json: ") + e.what());
    }
    require(j.contains("nodes") && j.contains("root"), ErrorKind::InvalidArgument, "tree json needs nodes and root");
    std::vector<NodePtr> built;
    for (const auto& nj : j["nodes"]) {
        auto n = std::make_shared<Node>();
        n->size = 1;
        for (const auto& c : nj.at("children")) {
            std::size_t idx = c.at(0).get<std::size_t>();
            unsigned k = c.at(1).get<unsigned>();
            require(idx < built.size(), ErrorKind::InvalidArgument, "tree json child must precede its parent");
            n->children.push_back({built[idx], k});
            n->size += built[idx]->size * k;
            n->root_degree += k;
        }
        built.push_back(std::move(n));
    }
    std::size_t r = j["root"].get<std::size_t>();
    require(r < built.size(), ErrorKind::InvalidArgument, "tree json root out of range");
    return RootedTree(built[r]);
}

PathTransfer path_transfer(unsigned k, const mpq_class& b) {
    require(k >= 2, ErrorKind::InvalidArgument, "path length k must be at least 2");
    // [[1,b],[b,1]] has eigenvalues 1 +- b on (1,1) and (1,-1).
    mpq_class p = 1, q = 1, up = 1 + b, dn = 1 - b;
    for (unsigned j = 1; j < k; ++j) {
        p *= up;
        q *= dn;
    }
    PathTransfer t;
    t.diag = (p + q) / 2;
    t.offdiag = (p - q) / 2;
    t.diag.canonicalize();
    t.offdiag.canonicalize();
    t.b_k = t.offdiag / t.diag;
    return t;
}

}  // namespace isingdyn
