#pragma once

#include "isingdyn/exact.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isingdyn {

struct Edge {
    int u = 0;
    int v = 0;
    unsigned mult = 1;
};

// Spin weights of a single vertex; the default is (lambda, 1).
struct VertexWeight {
    GaussianRational plus;
    GaussianRational minus{1};
};

// Undirected multigraph on vertices 0..n-1 with optional spin pins and per-vertex weights.
class Graph {
public:
    Graph() = default;
    explicit Graph(int n);

    int add_vertex();
    // Adds mult copies of {u,v}; parallel copies are merged into one entry.
    void add_edge(int u, int v, unsigned mult = 1);
    // Removes one copy of {u,v}.
    void remove_edge(int u, int v);

    int num_vertices() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    unsigned edge_count() const;  // with multiplicity
    unsigned multiplicity(int u, int v) const;
    unsigned degree(int v) const;
    unsigned max_degree() const;
    bool is_connected() const;
    bool is_simple() const;
    // Neighbours with multiplicity, one entry per distinct neighbour.
    std::vector<std::vector<std::pair<int, unsigned>>> adjacency() const;

    // spin is +1 or -1.
    void pin(int v, int spin);
    void unpin(int v);
    const std::map<int, int>& pins() const { return pins_; }
    void set_field(int v, const GaussianRational& field);
    void set_weight(int v, const VertexWeight& w);
    const std::map<int, VertexWeight>& weights() const { return weights_; }

    // Disjoint union; returns the offset of the other graph's vertices.
    int absorb(const Graph& other);

    std::string to_json() const;
    static Graph from_json(const std::string& text);

    friend bool operator==(const Graph& a, const Graph& b);

private:
    void check_vertex(int v) const;

    int n_ = 0;
    std::vector<Edge> edges_;
    std::map<int, int> pins_;
    std::map<int, VertexWeight> weights_;
};

Graph empty_graph(int n);
Graph path_graph(int n);
Graph cycle_graph(int n);
Graph complete_graph(int n);
Graph star_graph(int leaves);

// Canonical code of a simple graph on at most 11 vertices: equal iff isomorphic.
std::uint64_t canonical_code(const Graph& g);

struct GraphFilter {
    unsigned max_degree = ~0u;
    bool connected = false;
};

// One representative per isomorphism class of simple graphs on n vertices (n <= 10).
std::vector<Graph> enumerate_graphs(int n, const GraphFilter& filter = {});

}  // namespace isingdyn
