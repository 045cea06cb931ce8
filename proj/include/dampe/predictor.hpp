#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dampe/hetgraph.hpp"
#include "dampe/matrix.hpp"
#include "dampe/moe.hpp"
#include "dampe/optim.hpp"
#include "dampe/tape.hpp"

namespace dampe {

/// Two-layer MLP over condition embeddings with per-term sigmoid outputs.
class Classifier {
public:
    Classifier(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_terms,
               std::string prefix = "clf");

    std::size_t n_terms() const { return n_terms_; }
    void init_params(ParamStore& store, Rng& rng) const;
    std::vector<std::string> param_names() const;

    Var logits(Tape& tape, ParamStore& store, Var h_tilde) const;
    /// Pure inference: probabilities in (0,1), rows per protein.
    DenseMatrix predict_probs(const ParamStore& store, const DenseMatrix& h_tilde) const;

private:
    std::size_t input_dim_, hidden_dim_, n_terms_;
    std::string prefix_;
};

/// Binary label matrix (proteins x terms); loader verifies true-path
/// consistency against the DAG.
struct LabelMatrix {
    DenseMatrix y;  // entries in {0, 1}

    void verify_true_path(const GoDag& dag) const;
};

struct FinetuneConfig {
    std::size_t steps = 300;
    std::size_t batch_size = 32;
    double peak_lr = 2e-4;
    double weight_decay = 1e-4;
    double warmup_fraction = 0.1;
    double prob_clamp = 1e-7;
};

/// One fine-tuning step: factorized Bernoulli negative log-likelihood over
/// (protein, term) pairs, gradients flowing into the classifier AND the
/// condition encoder (upstream embeddings frozen). Returns the batch loss.
double finetune_step(const MoeEncoder& moe, const Classifier& clf, ParamStore& params,
                     AdamW& opt, double lr, const DenseMatrix& h_rows,
                     const DenseMatrix& label_rows, double prob_clamp = 1e-7);

/// Eq.-9 true-path propagation: every term's score becomes the max of itself
/// and its descendants, in one reverse-topological sweep. Idempotent.
DenseMatrix true_path_propagate(const DenseMatrix& preds, const GoDag& dag);

/// Protein-centric Fmax over the threshold grid {0.00, 0.01, ..., 1.00}.
/// Precision averages over proteins with at least one prediction >= tau;
/// recall averages over proteins with at least one true label.
std::pair<double, double> fmax(const DenseMatrix& preds, const DenseMatrix& labels);

/// Micro-averaged area under the precision-recall curve over all
/// (protein, term) pairs, step-wise interpolation, score ties grouped.
double aupr(const DenseMatrix& preds, const DenseMatrix& labels);

}  // namespace dampe
