#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "dampe/denoiser.hpp"
#include "dampe/diffusion.hpp"
#include "dampe/hetgraph.hpp"
#include "dampe/moe.hpp"
#include "dampe/optim.hpp"

namespace dampe {

struct TrainConfig {
    std::size_t diffusion_steps = 50;  // T
    double schedule_shift = 0.008;
    std::size_t batch_size = 8;  // ego-graphs per step
    std::size_t steps = 500;
    double learning_rate = 2e-4;
    double weight_decay = 1e-12;
    double cond_drop_prob = 0.1;
    std::size_t hops = 2;
    FanoutSpec fanout;
    std::size_t node_cap = 32;
};

struct LossRecord {
    std::size_t step = 0;
    std::size_t t = 0;
    double loss = 0.0;
    bool conditioned = true;
};

/// Mean over ordered pairs (diagonal excluded) of cross-entropy between the
/// one-hot clean relation and softmax(P_hat).
double reconstruction_loss(const EdgeLogits& p_hat, const AdjTensor& a0);

/// One-hot target matrix for the tape loss, rows in ordered_pairs order.
DenseMatrix onehot_targets(const AdjTensor& a0);

/// Joint pre-training of the denoiser and the condition encoder: sample a
/// batch of ego-graphs, corrupt at a shared t ~ Uniform{1..T}, encode
/// conditions (or drop the whole batch with cond_drop_prob), predict, average
/// the reconstruction loss, and take one AdamW step over both parameter sets.
class PretrainLoop {
public:
    PretrainLoop(const HetGraph& graph, const DenseMatrix& h_global, const DenseMatrix& z_global,
                 MoeEncoder moe, Denoiser denoiser, ParamStore& params, TrainConfig cfg,
                 std::uint64_t seed);

    LossRecord step();
    std::vector<LossRecord> run(std::size_t steps,
                                const std::function<void(const LossRecord&)>& on_step = {});

    const NoiseSchedule& schedule() const { return schedule_; }
    const RelDist& marginal() const { return marginal_; }
    ParamStore& params() { return *params_; }
    const TrainConfig& config() const { return cfg_; }

private:
    const HetGraph* graph_;
    const DenseMatrix* h_global_;
    const DenseMatrix* z_global_;
    MoeEncoder moe_;
    Denoiser denoiser_;
    ParamStore* params_;
    TrainConfig cfg_;
    NoiseSchedule schedule_;
    RelDist marginal_{};
    AdamW opt_;
    Rng rng_;
    std::size_t step_index_ = 0;
};

/// Exactly enumerable joint over a tiny all-protein ego-graph: at most 4
/// discrete H variants, relations independent per ordered pair given the
/// variant.
struct TinyInstance {
    std::size_t n_nodes = 2;
    std::vector<double> h_weights;              // sums to 1
    std::vector<DenseMatrix> h_variants;        // one feature matrix per variant
    std::vector<std::vector<RelDist>> pair_dists;  // [variant][pair] over relations

    std::size_t pair_count() const { return n_nodes * (n_nodes - 1); }
    void validate() const;
};

/// Model under test for the entropy bound: `condition` defines the grouping
/// of variants by condition-embedding equality; `predict` returns per-pair
/// clean-relation distributions for a variant and noisy state.
struct EnumerableModel {
    std::function<std::vector<double>(std::size_t variant)> condition;
    std::function<std::vector<RelDist>(std::size_t variant, const AdjTensor& at, std::size_t t)>
        predict;
};

struct EntropyBoundResult {
    double loss = 0.0;     // E[-log p_model(A0 | At, cond)], joint nats
    double entropy = 0.0;  // exact H(A0 | At, cond), joint nats
};

/// Computes the diffusion loss by exact expectation over the enumerated joint
/// (no sampling) and the exact conditional entropy H(A0 | At, cond) at
/// timestep t. Loss >= entropy for every model; the exact-posterior oracle
/// attains equality when condition embeddings separate the variants.
EntropyBoundResult entropy_bound_check(const TinyInstance& instance, const EnumerableModel& model,
                                       const NoiseSchedule& schedule, std::size_t t,
                                       const RelDist& m);

/// Oracle whose predictions equal the exact per-pair posterior marginals of
/// the instance, grouped by byte-identical H variants.
EnumerableModel exact_posterior_model(const TinyInstance& instance, const NoiseSchedule& schedule,
                                      const RelDist& m);

}  // namespace dampe
