#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dampe/hetgraph.hpp"
#include "dampe/matrix.hpp"
#include "dampe/otalign.hpp"
#include "dampe/predictor.hpp"

namespace dampe {

enum class CrossModalMap { rotation, permutation, random_linear };

const char* cross_modal_map_name(CrossModalMap m);
CrossModalMap cross_modal_map_from_name(const std::string& name);

struct SynthConfig {
    std::size_t n_proteins = 300;
    std::size_t n_terms = 40;
    std::size_t d_seq = 16;
    std::size_t d_struc = 16;
    std::size_t latent_dim = 8;
    std::size_t n_clusters = 5;
    double center_spread = 2.0;
    double latent_noise = 0.3;
    double seq_noise = 0.05;
    double struc_noise = 0.05;
    double struc_scale = 3.0;  // cross-modal scale mismatch
    CrossModalMap map_kind = CrossModalMap::permutation;
    double ppi_homophily = 5.0;       // same-cluster density / cross-cluster density
    double ppi_cross_density = 0.003; // cross-cluster pairwise edge probability
    std::size_t dag_roots = 4;
    double dag_second_parent_prob = 0.5;
    std::size_t dag_max_depth = 5;
    std::size_t terms_per_cluster = 1;
    double label_noise = 0.1;  // chance of one extra random (closed) term
    std::size_t d_go = 8;
    double train_frac = 0.7;
    double valid_frac = 0.1;
    std::uint64_t seed = 7;
};

/// Desk-scale dataset with planted structure. Structure embeddings are a
/// deterministic cross-modal transform of the same latent as the sequence
/// embeddings plus independent noise, so alignment quality is checkable
/// against the planted map.
struct SynthDataset {
    SynthConfig config;
    DenseMatrix e_seq;    // n_proteins x d_seq
    DenseMatrix e_struc;  // n_proteins x d_struc
    DenseMatrix z;        // n_terms x d_go
    HetGraph graph;       // anno edges derived from train/valid labels only
    LabelMatrix labels;   // full ground truth, all proteins
    std::vector<Split> splits;            // per protein ordinal
    DenseMatrix latents;                  // ground-truth latents
    std::vector<std::size_t> clusters;    // per protein
    std::vector<std::size_t> planted_perm;  // permutation map targets (else empty)

    double noedge_fraction() const;
};

SynthDataset gen_dataset(const SynthConfig& config);

/// Fraction of structure dimensions whose plan-row argmax equals the planted
/// permutation target. Requires the permutation map and square dims.
double planted_map_check(const SynthDataset& dataset, const TransportPlan& plan);

/// Writes all file-format surfaces: e_seq.mat / e_struc.mat / z.mat,
/// edges.tsv, nodes.tsv, splits.tsv, labels.tsv, manifest.json.
void write_dataset(const std::string& dir, const SynthDataset& dataset);

}  // namespace dampe
