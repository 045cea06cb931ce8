#include "dampe/hetgraph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "dampe/error.hpp"

namespace dampe {

namespace {

std::uint64_t pair_key(std::uint32_t u, std::uint32_t v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, '\t')) out.push_back(cur);
    return out;
}

}  // namespace

const char* relation_name(Relation r) {
    switch (r) {
        case Relation::ppi: return "ppi";
        case Relation::go: return "go";
        case Relation::anno: return "anno";
        case Relation::noedge: return "noedge";
    }
    return "?";
}

Relation relation_from_name(const std::string& name) {
    if (name == "ppi") return Relation::ppi;
    if (name == "go") return Relation::go;
    if (name == "anno") return Relation::anno;
    if (name == "noedge") return Relation::noedge;
    throw DataFault("unknown relation: " + name);
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "valid") return Split::valid;
    if (name == "test") return Split::test;
    throw DataFault("unknown split: " + name);
}

std::size_t FanoutSpec::of(Relation r) const {
    switch (r) {
        case Relation::ppi: return ppi;
        case Relation::go: return go;
        case Relation::anno: return anno;
        default: return 0;
    }
}

GoDag GoDag::from_edges(std::size_t n_terms,
                        const std::vector<std::pair<std::uint32_t, std::uint32_t>>& child_parent) {
    GoDag dag;
    dag.n_terms = n_terms;
    dag.parents.assign(n_terms, {});
    dag.children.assign(n_terms, {});
    for (const auto& [child, parent] : child_parent) {
        check_data(child < n_terms && parent < n_terms, "GoDag: term ordinal out of range");
        check_data(child != parent, "GoDag: self edge");
        dag.parents[child].push_back(parent);
        dag.children[parent].push_back(child);
    }
    for (auto& v : dag.parents) std::sort(v.begin(), v.end());
    for (auto& v : dag.children) std::sort(v.begin(), v.end());
    dag.topo_order();  // acyclicity check
    return dag;
}

std::vector<std::uint32_t> GoDag::topo_order() const {
    // Kahn over child->parent edges: a term is emitted once all of its
    // children (hence all descendants) have been emitted.
    std::vector<std::size_t> pending(n_terms);
    for (std::size_t t = 0; t < n_terms; ++t) pending[t] = children[t].size();
    std::vector<std::uint32_t> order;
    order.reserve(n_terms);
    std::vector<std::uint32_t> ready;
    for (std::size_t t = 0; t < n_terms; ++t)
        if (pending[t] == 0) ready.push_back(static_cast<std::uint32_t>(t));
    while (!ready.empty()) {
        const std::uint32_t t = ready.back();
        ready.pop_back();
        order.push_back(t);
        for (std::uint32_t p : parents[t])
            if (--pending[p] == 0) ready.push_back(p);
    }
    if (order.size() != n_terms) {
        for (std::size_t t = 0; t < n_terms; ++t)
            if (pending[t] > 0)
                throw DataFault("GO DAG contains a cycle through term " + std::to_string(t));
    }
    return order;
}

std::vector<std::uint32_t> GoDag::ancestors_of(std::uint32_t term) const {
    std::vector<bool> seen(n_terms, false);
    std::vector<std::uint32_t> stack = parents[term], out;
    while (!stack.empty()) {
        const std::uint32_t t = stack.back();
        stack.pop_back();
        if (seen[t]) continue;
        seen[t] = true;
        out.push_back(t);
        for (std::uint32_t p : parents[t]) stack.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(n < 2 ? 0 : n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) out.emplace_back(i, j);
    return out;
}

HetGraph HetGraph::build(std::vector<NodeKind> kinds, const std::vector<Edge>& raw_edges,
                         std::vector<Split> protein_splits, bool reject_leakage) {
    HetGraph g;
    g.kinds_ = std::move(kinds);
    for (std::uint32_t id = 0; id < g.kinds_.size(); ++id) {
        if (g.kinds_[id] == NodeKind::protein) {
            g.protein_ord_[id] = g.protein_ids_.size();
            g.protein_ids_.push_back(id);
        } else {
            g.go_ord_[id] = g.go_ids_.size();
            g.go_ids_.push_back(id);
        }
    }
    check_data(protein_splits.size() == g.protein_ids_.size(),
               "split assignment must cover every protein");
    g.splits_ = std::move(protein_splits);

    auto kind_ok = [&](const Edge& e) {
        switch (e.rel) {
            case Relation::ppi:
                return g.kinds_[e.src] == NodeKind::protein && g.kinds_[e.dst] == NodeKind::protein;
            case Relation::go:
                return g.kinds_[e.src] == NodeKind::go && g.kinds_[e.dst] == NodeKind::go;
            case Relation::anno:
                return g.kinds_[e.src] == NodeKind::protein && g.kinds_[e.dst] == NodeKind::go;
            default:
                return false;
        }
    };

    std::vector<std::pair<std::uint32_t, std::uint32_t>> go_pairs;
    for (const Edge& raw : raw_edges) {
        check_data(raw.src < g.kinds_.size() && raw.dst < g.kinds_.size(),
                   "edge references an unregistered node id");
        check_data(raw.rel != Relation::noedge, "explicit noedge entries are not stored");
        if (raw.src == raw.dst) {
            ++g.dropped_self_loops_;
            continue;
        }
        check_data(kind_ok(raw), std::string("relation ") + relation_name(raw.rel) +
                                     " incompatible with endpoint kinds");
        // ppi is undirected: materialize both directions.
        const bool both = raw.rel == Relation::ppi;
        for (int dir = 0; dir < (both ? 2 : 1); ++dir) {
            const std::uint32_t u = dir == 0 ? raw.src : raw.dst;
            const std::uint32_t v = dir == 0 ? raw.dst : raw.src;
            auto [it, inserted] = g.pair_rel_.emplace(pair_key(u, v), raw.rel);
            if (!inserted) {
                if (it->second == raw.rel) {
                    if (dir == 0) ++g.collapsed_duplicates_;
                    continue;
                }
                throw DataFault("conflicting relations for ordered pair (" + std::to_string(u) +
                                ", " + std::to_string(v) + ")");
            }
            g.edges_.push_back(Edge{u, v, raw.rel});
            if (raw.rel == Relation::go)
                go_pairs.emplace_back(static_cast<std::uint32_t>(g.go_ord_.at(u)),
                                      static_cast<std::uint32_t>(g.go_ord_.at(v)));
            if (reject_leakage && raw.rel == Relation::anno &&
                g.splits_[g.protein_ord_.at(u)] == Split::test)
                throw DataFault("label leakage: annotation edge touches test protein " +
                                std::to_string(u));
        }
    }

    g.dag_ = GoDag::from_edges(g.go_ids_.size(), go_pairs);

    for (auto& rel_adj : g.adj_) rel_adj.assign(g.kinds_.size(), {});
    for (const Edge& e : g.edges_) {
        const auto r = static_cast<std::size_t>(e.rel);
        g.adj_[r][e.src].push_back(e.dst);
        if (e.rel != Relation::ppi) g.adj_[r][e.dst].push_back(e.src);  // ppi already both ways
    }
    for (auto& rel_adj : g.adj_)
        for (auto& nbrs : rel_adj) {
            std::sort(nbrs.begin(), nbrs.end());
            nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        }
    return g;
}

std::size_t HetGraph::protein_ordinal(std::uint32_t id) const {
    auto it = protein_ord_.find(id);
    check_contract(it != protein_ord_.end(), "not a protein id: " + std::to_string(id));
    return it->second;
}

std::size_t HetGraph::go_ordinal(std::uint32_t id) const {
    auto it = go_ord_.find(id);
    check_contract(it != go_ord_.end(), "not a GO id: " + std::to_string(id));
    return it->second;
}

Split HetGraph::split_of(std::uint32_t protein_id) const {
    return splits_[protein_ordinal(protein_id)];
}

Relation HetGraph::relation_of(std::uint32_t u, std::uint32_t v) const {
    auto it = pair_rel_.find(pair_key(u, v));
    return it == pair_rel_.end() ? Relation::noedge : it->second;
}

const std::vector<std::uint32_t>& HetGraph::neighbors(std::uint32_t u, Relation r) const {
    return adj_[static_cast<std::size_t>(r)][u];
}

HetGraph load_edges(const std::string& edge_path, const std::string& node_path,
                    const std::string& split_path) {
    std::ifstream nodes_in(node_path);
    if (!nodes_in) throw DataFault("cannot open node file: " + node_path);
    std::vector<std::pair<std::uint32_t, NodeKind>> node_rows;
    std::string line;
    while (std::getline(nodes_in, line)) {
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        check_data(cols.size() == 2, "node file: expected 'id<TAB>kind'");
        const auto id = static_cast<std::uint32_t>(std::stoul(cols[0]));
        NodeKind kind;
        if (cols[1] == "protein") kind = NodeKind::protein;
        else if (cols[1] == "go") kind = NodeKind::go;
        else throw DataFault("node file: unknown kind " + cols[1]);
        node_rows.emplace_back(id, kind);
    }
    std::vector<NodeKind> kinds(node_rows.size());
    std::vector<bool> seen(node_rows.size(), false);
    for (const auto& [id, kind] : node_rows) {
        check_data(id < kinds.size() && !seen[id], "node ids must be dense and unique");
        seen[id] = true;
        kinds[id] = kind;
    }

    std::ifstream edges_in(edge_path);
    if (!edges_in) throw DataFault("cannot open edge file: " + edge_path);
    std::vector<Edge> edges;
    while (std::getline(edges_in, line)) {
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        check_data(cols.size() == 3, "edge file: expected 'src<TAB>dst<TAB>relation'");
        Edge e;
        e.src = static_cast<std::uint32_t>(std::stoul(cols[0]));
        e.dst = static_cast<std::uint32_t>(std::stoul(cols[1]));
        e.rel = relation_from_name(cols[2]);
        edges.push_back(e);
    }

    std::ifstream splits_in(split_path);
    if (!splits_in) throw DataFault("cannot open split file: " + split_path);
    std::size_t protein_count = 0;
    for (NodeKind k : kinds)
        if (k == NodeKind::protein) ++protein_count;
    std::vector<Split> splits(protein_count, Split::train);
    std::vector<bool> split_seen(protein_count, false);
    std::vector<std::size_t> ordinal(kinds.size(), 0);
    {
        std::size_t next = 0;
        for (std::uint32_t id = 0; id < kinds.size(); ++id)
            if (kinds[id] == NodeKind::protein) ordinal[id] = next++;
    }
    while (std::getline(splits_in, line)) {
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        check_data(cols.size() == 2, "split file: expected 'protein_id<TAB>split'");
        const auto id = static_cast<std::uint32_t>(std::stoul(cols[0]));
        check_data(id < kinds.size() && kinds[id] == NodeKind::protein,
                   "split file references a non-protein id");
        splits[ordinal[id]] = split_from_name(cols[1]);
        split_seen[ordinal[id]] = true;
    }
    for (std::size_t i = 0; i < protein_count; ++i)
        check_data(split_seen[i], "split file does not cover every protein");

    return HetGraph::build(std::move(kinds), edges, std::move(splits));
}

std::array<double, kRelationCount> relation_marginals(const HetGraph& graph) {
    const std::size_t n = graph.node_count();
    check_contract(n >= 2, "relation_marginals: need at least one ordered pair");
    std::array<std::size_t, kRelationCount> counts{};
    for (const Edge& e : graph.edges()) ++counts[static_cast<std::size_t>(e.rel)];
    const std::size_t total = n * (n - 1);
    counts[static_cast<std::size_t>(Relation::noedge)] =
        total - counts[0] - counts[1] - counts[2];
    std::array<double, kRelationCount> m{};
    for (std::size_t r = 0; r < kRelationCount; ++r)
        m[r] = static_cast<double>(counts[r]) / static_cast<double>(total);
    return m;
}

std::array<double, kRelationCount> relation_marginals(const std::vector<EgoGraph>& egos) {
    std::array<std::size_t, kRelationCount> counts{};
    std::size_t total = 0;
    for (const EgoGraph& ego : egos) {
        const std::size_t n = ego.size();
        total += ego.adj.pair_count();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) ++counts[static_cast<std::size_t>(ego.adj.at(i, j))];
    }
    check_contract(total > 0, "relation_marginals: need at least one ordered pair");
    std::array<double, kRelationCount> m{};
    for (std::size_t r = 0; r < kRelationCount; ++r)
        m[r] = static_cast<double>(counts[r]) / static_cast<double>(total);
    return m;
}

AdjTensor build_adjacency(std::size_t n_nodes, const std::vector<Edge>& local_edges) {
    AdjTensor adj(n_nodes);
    for (const Edge& e : local_edges) {
        check_contract(e.src < n_nodes && e.dst < n_nodes && e.src != e.dst,
                       "build_adjacency: bad local edge");
        const Relation existing = adj.at(e.src, e.dst);
        if (existing != Relation::noedge && existing != e.rel)
            throw DataFault("build_adjacency: conflicting relations for ordered pair (" +
                            std::to_string(e.src) + ", " + std::to_string(e.dst) + ")");
        adj.set(e.src, e.dst, e.rel);
    }
    return adj;
}

EgoGraph sample_ego(const HetGraph& graph, std::uint32_t center, std::size_t hops,
                    const FanoutSpec& fanout, std::uint64_t seed, std::size_t node_cap) {
    check_contract(center < graph.node_count() && graph.kind(center) == NodeKind::protein,
                   "sample_ego: center must be a protein");
    check_contract(hops >= 1, "sample_ego: hops must be >= 1");
    check_contract(node_cap >= 1, "sample_ego: node cap must be >= 1");

    Rng rng(seed);
    EgoGraph ego;
    std::unordered_map<std::uint32_t, std::size_t> local_of;
    auto add_node = [&](std::uint32_t id) {
        if (local_of.count(id) || ego.nodes.size() >= node_cap) return false;
        local_of[id] = ego.nodes.size();
        ego.nodes.push_back(id);
        ego.kinds.push_back(graph.kind(id));
        return true;
    };
    add_node(center);
    ego.center_local = 0;

    std::vector<std::uint32_t> frontier{center};
    static constexpr Relation kTraversable[3] = {Relation::ppi, Relation::go, Relation::anno};
    for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
        std::vector<std::uint32_t> next;
        for (std::uint32_t u : frontier) {
            for (Relation r : kTraversable) {
                const std::size_t budget = fanout.of(r);
                if (budget == 0) continue;
                const auto& nbrs = graph.neighbors(u, r);
                if (nbrs.empty()) continue;
                auto picked = rng.sample_without_replacement(nbrs, budget);
                for (std::uint32_t v : picked)
                    if (add_node(v)) next.push_back(v);
            }
        }
        frontier = std::move(next);
    }

    // Induced explicit edges among sampled nodes.
    std::vector<Edge> local_edges;
    for (std::size_t i = 0; i < ego.nodes.size(); ++i)
        for (std::size_t j = 0; j < ego.nodes.size(); ++j) {
            if (i == j) continue;
            const Relation r = graph.relation_of(ego.nodes[i], ego.nodes[j]);
            if (r != Relation::noedge)
                local_edges.push_back(Edge{static_cast<std::uint32_t>(i),
                                           static_cast<std::uint32_t>(j), r});
        }
    ego.adj = build_adjacency(ego.nodes.size(), local_edges);
    for (std::size_t i = 0; i < ego.nodes.size(); ++i)
        (ego.kinds[i] == NodeKind::protein ? ego.protein_locals : ego.go_locals).push_back(i);
    return ego;
}

void attach_features(EgoGraph& ego, const HetGraph& graph, const DenseMatrix& h_global,
                     const DenseMatrix& z_global) {
    ego.h_rows = DenseMatrix(ego.protein_locals.size(), h_global.cols);
    for (std::size_t k = 0; k < ego.protein_locals.size(); ++k) {
        const std::size_t ord = graph.protein_ordinal(ego.nodes[ego.protein_locals[k]]);
        check_contract(ord < h_global.rows, "attach_features: H row missing");
        std::copy(h_global.row_ptr(ord), h_global.row_ptr(ord) + h_global.cols,
                  ego.h_rows.row_ptr(k));
    }
    ego.z_rows = DenseMatrix(ego.go_locals.size(), z_global.cols);
    for (std::size_t k = 0; k < ego.go_locals.size(); ++k) {
        const std::size_t ord = graph.go_ordinal(ego.nodes[ego.go_locals[k]]);
        check_contract(ord < z_global.rows, "attach_features: Z row missing");
        std::copy(z_global.row_ptr(ord), z_global.row_ptr(ord) + z_global.cols,
                  ego.z_rows.row_ptr(k));
    }
}

HetGraph strip_test_annotations(const HetGraph& graph) {
    std::vector<NodeKind> kinds(graph.node_count());
    for (std::uint32_t id = 0; id < graph.node_count(); ++id) kinds[id] = graph.kind(id);
    std::vector<Split> splits(graph.protein_count());
    for (std::uint32_t id : graph.protein_ids())
        splits[graph.protein_ordinal(id)] = graph.split_of(id);
    std::vector<Edge> kept;
    for (const Edge& e : graph.edges()) {
        if (e.rel == Relation::anno && graph.split_of(e.src) == Split::test) continue;
        if (e.rel == Relation::ppi && e.src > e.dst) continue;  // build re-symmetrizes
        kept.push_back(e);
    }
    return HetGraph::build(std::move(kinds), kept, std::move(splits));
}

}  // namespace dampe
