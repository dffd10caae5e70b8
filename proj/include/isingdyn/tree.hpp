#pragma once

#include "isingdyn/exact.hpp"
#include "isingdyn/graph.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace isingdyn {

// Rooted tree stored as a DAG of shared subtrees, so that trees built by
// repeated attachment stay small in memory even when their size is huge.
class RootedTree {
public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;
    struct Node {
        std::vector<std::pair<NodePtr, unsigned>> children;  // subtree, copies
        mpz_class size;
        unsigned root_degree = 0;
    };

    // The one-vertex tree.
    RootedTree();
    static RootedTree vertex() { return RootedTree(); }
    // T2 with k fresh copies of T1 hung from its root; the field is f_{xi2,k}(xi1).
    static RootedTree attach(const RootedTree& t2, const RootedTree& t1, unsigned k);
    // g must be a simple tree; r becomes the root.
    static RootedTree from_graph(const Graph& g, int r);

    const NodePtr& root() const { return root_; }
    mpz_class size() const { return root_->size; }
    unsigned root_degree() const { return root_->root_degree; }
    unsigned max_degree() const;
    std::size_t dag_nodes() const;

    // Expanded graph with the root at vertex 0; TooLarge beyond cap vertices.
    Graph to_graph(std::size_t cap = 1u << 20) const;
    // DAG export; each node carries its (Z+, Z-) pair.
    std::string to_dot(const GaussianRational& lambda, const mpq_class& b) const;
    // DAG as {"nodes": [{"children": [[index, copies], ...]}, ...], "root": index}, children first.
    std::string to_json() const;
    static RootedTree from_json(const std::string& text);

private:
    explicit RootedTree(NodePtr n) : root_(std::move(n)) {}
    NodePtr root_;
};

// Root-pinned partition values (Z+, Z-).
std::pair<GaussianRational, GaussianRational> tree_partition(const RootedTree& t, const GaussianRational& lambda,
                                                             const mpq_class& b);

// Z+/Z-, computed through the ratio recursion. ZeroDenominator when Z- = 0.
GaussianRational tree_field_value(const RootedTree& t, const GaussianRational& lambda, const mpq_class& b);
UnitPoint tree_field(const RootedTree& t, const UnitPoint& lambda, const mpq_class& b);

struct PathTransfer {
    mpq_class diag;     // entries of [[1,b],[b,1]]^(k-1)
    mpq_class offdiag;
    mpq_class b_k;      // offdiag / diag
};

PathTransfer path_transfer(unsigned k, const mpq_class& b);

}  // namespace isingdyn
