#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dampe/matrix.hpp"
#include "dampe/rng.hpp"

namespace dampe {

enum class NodeKind : std::uint8_t { protein = 0, go = 1 };

/// Edge relation over ordered node pairs. noedge is the designated absorbing
/// "absent" type; every ordered pair carries exactly one relation.
enum class Relation : std::uint8_t { ppi = 0, go = 1, anno = 2, noedge = 3 };
inline constexpr std::size_t kRelationCount = 4;

const char* relation_name(Relation r);
Relation relation_from_name(const std::string& name);

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Edge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    Relation rel = Relation::noedge;
};

/// GO DAG over term ordinals; edges run child -> parent.
struct GoDag {
    std::size_t n_terms = 0;
    std::vector<std::vector<std::uint32_t>> parents;   // term -> direct parents
    std::vector<std::vector<std::uint32_t>> children;  // term -> direct children

    /// Builds from child->parent pairs; throws DataFault naming a cycle member
    /// if the edges are not acyclic.
    static GoDag from_edges(std::size_t n_terms,
                            const std::vector<std::pair<std::uint32_t, std::uint32_t>>& child_parent);

    /// Order in which every term appears after all of its descendants.
    std::vector<std::uint32_t> topo_order() const;

    /// All ancestors of a term (transitive parents, excluding the term).
    std::vector<std::uint32_t> ancestors_of(std::uint32_t term) const;
};

/// One-hot relation assignment over ordered local pairs of an ego-graph.
/// Categorical storage keeps the one-hot invariant by construction; diagonal
/// entries are unused.
struct AdjTensor {
    std::size_t n = 0;
    std::vector<Relation> rel;  // n*n, row-major

    AdjTensor() = default;
    explicit AdjTensor(std::size_t n_) : n(n_), rel(n_ * n_, Relation::noedge) {}

    Relation at(std::size_t i, std::size_t j) const { return rel[i * n + j]; }
    void set(std::size_t i, std::size_t j, Relation r) { rel[i * n + j] = r; }
    std::size_t pair_count() const { return n < 2 ? 0 : n * (n - 1); }

    bool operator==(const AdjTensor& o) const { return n == o.n && rel == o.rel; }
};

/// Ordered pairs (i, j), i != j, in row-major order; the canonical pair
/// enumeration shared by diffusion, denoiser, and losses.
std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(std::size_t n);

struct EgoGraph {
    std::vector<std::uint32_t> nodes;  // local -> global id, discovery order
    std::vector<NodeKind> kinds;       // per local node
    std::size_t center_local = 0;
    AdjTensor adj;                             // clean adjacency A^(0)
    std::vector<std::size_t> protein_locals;   // local indices of protein nodes
    std::vector<std::size_t> go_locals;
    DenseMatrix h_rows;  // intrinsic features per protein node (may be empty)
    DenseMatrix z_rows;  // GO features per go node (may be empty)

    std::size_t size() const { return nodes.size(); }
};

struct FanoutSpec {
    std::size_t ppi = 8;
    std::size_t go = 8;
    std::size_t anno = 8;
    std::size_t of(Relation r) const;
};

class HetGraph {
public:
    /// Builds a validated graph. Drops self-loops, collapses duplicates,
    /// symmetrizes ppi, verifies GO acyclicity and relation/kind consistency.
    /// With reject_leakage set, annotation edges incident to test proteins
    /// are a data fault (pass false only to build an input for
    /// strip_test_annotations).
    static HetGraph build(std::vector<NodeKind> kinds, const std::vector<Edge>& raw_edges,
                          std::vector<Split> protein_splits, bool reject_leakage = true);

    std::size_t node_count() const { return kinds_.size(); }
    NodeKind kind(std::uint32_t id) const { return kinds_[id]; }
    std::size_t protein_count() const { return protein_ids_.size(); }
    std::size_t go_count() const { return go_ids_.size(); }
    const std::vector<std::uint32_t>& protein_ids() const { return protein_ids_; }
    const std::vector<std::uint32_t>& go_ids() const { return go_ids_; }

    /// Dense ordinal of a node among its kind (by ascending id).
    std::size_t protein_ordinal(std::uint32_t id) const;
    std::size_t go_ordinal(std::uint32_t id) const;

    Split split_of(std::uint32_t protein_id) const;
    const std::vector<Edge>& edges() const { return edges_; }
    const GoDag& dag() const { return dag_; }

    /// Explicit relation of an ordered pair, noedge when absent.
    Relation relation_of(std::uint32_t u, std::uint32_t v) const;

    std::size_t dropped_self_loops() const { return dropped_self_loops_; }
    std::size_t collapsed_duplicates() const { return collapsed_duplicates_; }

    /// Neighbors of u under r, treating stored edges as traversable in both
    /// directions; sorted ascending for deterministic sampling.
    const std::vector<std::uint32_t>& neighbors(std::uint32_t u, Relation r) const;

private:
    std::vector<NodeKind> kinds_;
    std::vector<Edge> edges_;
    std::vector<Split> splits_;  // indexed by protein ordinal
    std::vector<std::uint32_t> protein_ids_, go_ids_;
    std::unordered_map<std::uint32_t, std::size_t> protein_ord_, go_ord_;
    std::unordered_map<std::uint64_t, Relation> pair_rel_;
    std::array<std::vector<std::vector<std::uint32_t>>, 3> adj_;
    GoDag dag_;
    std::size_t dropped_self_loops_ = 0;
    std::size_t collapsed_duplicates_ = 0;
};

/// Reads the TSV triple (edge file `src dst relation`, node file `id kind`,
/// split file `protein_id split`) and validates via HetGraph::build.
HetGraph load_edges(const std::string& edge_path, const std::string& node_path,
                    const std::string& split_path);

/// Marginal distribution over the four relation types, computed over all
/// ordered pairs of distinct nodes (noedge pairs included).
std::array<double, kRelationCount> relation_marginals(const HetGraph& graph);
std::array<double, kRelationCount> relation_marginals(const std::vector<EgoGraph>& egos);

/// Breadth-wise ego sampling around a protein center: at each hop, per
/// relation type, at most fanout neighbors drawn uniformly without
/// replacement. Deterministic given the seed. Node count capped.
EgoGraph sample_ego(const HetGraph& graph, std::uint32_t center, std::size_t hops,
                    const FanoutSpec& fanout, std::uint64_t seed, std::size_t node_cap = 32);

/// Fills one-hot adjacency over ordered pairs from explicit local edges;
/// conflicting relations for a pair are a data fault.
AdjTensor build_adjacency(std::size_t n_nodes, const std::vector<Edge>& local_edges);

/// Copies per-node feature rows out of the global matrices (H indexed by
/// protein ordinal, Z by go ordinal).
void attach_features(EgoGraph& ego, const HetGraph& graph, const DenseMatrix& h_global,
                     const DenseMatrix& z_global);

/// Returns a copy with annotation edges incident to test proteins removed.
HetGraph strip_test_annotations(const HetGraph& graph);

}  // namespace dampe
