#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dampe/diffusion.hpp"
#include "dampe/hetgraph.hpp"
#include "dampe/matrix.hpp"
#include "dampe/tape.hpp"

namespace dampe {

struct DenoiserConfig {
    std::size_t layers = 2;
    std::size_t d_model = 64;
    std::size_t d_edge = 32;
    std::size_t heads = 4;
    std::size_t d_cond = 64;  // width of condition rows (MoE output)
    std::size_t d_go = 8;     // width of GO feature rows
    std::size_t ffn_mult = 2;
};

/// Per-pair clean-relation logits in ordered_pairs order, plus the softmax
/// view.
struct EdgeLogits {
    std::size_t n_nodes = 0;
    DenseMatrix logits;  // n(n-1) x 4

    std::vector<RelDist> softmax() const;
};

/// Graph-transformer denoiser. Node tokens carry conditions plus a node-kind
/// embedding, edge tokens embed the one-hot noisy relations, and a sinusoidal
/// embedding of the timestep modulates every layer as a scale-and-shift.
/// Attention scores are additively biased by a projection of the edge token;
/// edge tokens are updated from (node_i, node_j, edge_ij); residuals wrap
/// both streams. The output head reads the final edge tokens only.
class Denoiser {
public:
    explicit Denoiser(DenoiserConfig cfg, std::string prefix = "denoiser");

    const DenoiserConfig& config() const { return cfg_; }
    const std::string& prefix() const { return prefix_; }

    void init_params(ParamStore& store, Rng& rng) const;
    std::vector<std::string> param_names() const;

    /// Full stack: tokenize -> layers -> head. `cond_rows` holds one row per
    /// protein node in ego order (the MoE output on the tape); nullopt means
    /// conditions dropped, substituting learned null embeddings for both
    /// protein and GO content (kind embeddings retained).
    Var predict_logits(Tape& tape, ParamStore& store, const EgoGraph& ego, const AdjTensor& at,
                       std::optional<Var> cond_rows, std::size_t t) const;

    /// Inference wrapper: runs a fresh tape, conditions from ego.h_rows
    /// passed through a caller-supplied encode step.
    EdgeLogits predict_clean(ParamStore& store, const EgoGraph& ego, const AdjTensor& at,
                             std::optional<DenseMatrix> cond_rows, std::size_t t) const;

    /// Sinusoidal timestep embedding, injective on t = 1..T for T < 1e4.
    static DenseMatrix time_embedding(std::size_t t, std::size_t dim);

private:
    DenoiserConfig cfg_;
    std::string prefix_;
    std::string p(const std::string& suffix) const { return prefix_ + "." + suffix; }
    std::string lp(std::size_t layer, const std::string& suffix) const;
};

/// Classifier-free guidance combination: (1+w) * cond - w * uncond per pair.
EdgeLogits cfg_logits(const EdgeLogits& cond, const EdgeLogits& uncond, double w);

}  // namespace dampe
