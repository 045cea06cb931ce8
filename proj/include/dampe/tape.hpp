#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dampe/matrix.hpp"
#include "dampe/rng.hpp"

namespace dampe {

/// Named parameter set shared across tapes. Values are mutated only by the
/// optimizer; gradients are written by Tape::backward.
class ParamStore {
public:
    /// Registers a parameter (no-op if the name exists with the same shape).
    int add(const std::string& name, DenseMatrix init);
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    int slot(const std::string& name) const;

    std::size_t count() const { return values_.size(); }
    const std::string& name(int slot) const { return names_[slot]; }
    DenseMatrix& value(int slot) { return values_[slot]; }
    const DenseMatrix& value(int slot) const { return values_[slot]; }
    DenseMatrix& value(const std::string& name) { return values_[slot(name)]; }
    const DenseMatrix& value(const std::string& name) const { return values_[slot(name)]; }
    DenseMatrix& grad(int slot) { return grads_[slot]; }
    const DenseMatrix& grad(int slot) const { return grads_[slot]; }
    DenseMatrix& grad(const std::string& name) { return grads_[slot(name)]; }
    const DenseMatrix& grad(const std::string& name) const { return grads_[slot(name)]; }

    void zero_grad();

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::vector<DenseMatrix> values_;
    std::vector<DenseMatrix> grads_;
};

/// Handle to a tape node.
struct Var {
    int id = -1;
};

/// Single-pass reverse-mode tape over a fixed primitive set. Build a fresh
/// tape per forward pass; parameters are bound from a ParamStore so their
/// gradients accumulate across backward calls until zero_grad.
///
/// Reductions that run over node-permuted axes (softmax row sums, attention
/// contraction) sum their addends in value order, which makes those forwards
/// exactly invariant to input permutations.
class Tape {
public:
    Tape() = default;

    // Leaves.
    Var constant(DenseMatrix value, const std::string& tag = "constant");
    Var param(ParamStore& store, int slot);
    Var param(ParamStore& store, const std::string& name) { return param(store, store.slot(name)); }

    // Elementwise / broadcast arithmetic.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var affine(Var a, double mul, double shift);  // mul*a + shift, elementwise
    Var add_rowvec(Var a, Var r);                 // r is 1 x cols
    Var mul_rowvec(Var a, Var r);
    Var mul_colvec(Var a, Var c);                 // c is rows x 1

    // Shape ops.
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var concat_cols(Var a, Var b);
    Var slice_cols(Var a, std::size_t lo, std::size_t hi);
    Var gather_rows(Var a, std::vector<std::size_t> idx);

    // Nonlinearities.
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var softmax_rows(Var a);
    Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);

    // Attention helpers.
    /// Scatters a column of per-pair values into an n x n matrix with zero
    /// diagonal. pairs[k] = (i, j) receives values[k].
    Var scatter_pairs(Var values, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                      std::size_t n);
    /// matmul(a, b) with the inner sum taken in value order (permutation-exact).
    Var matmul_setsum(Var a, Var b);

    // Reductions / losses (all produce 1x1).
    Var mean_all(Var a);
    Var sum_all(Var a);
    /// Mean over rows of cross-entropy between one-hot targets and
    /// softmax(logits). Targets are a constant matrix of the same shape.
    Var mean_ce_with_logits(Var logits, const DenseMatrix& onehot);
    /// Mean binary cross-entropy of probabilities vs. binary targets, with
    /// probabilities clamped to [clamp, 1-clamp] before the logs.
    Var bce_mean(Var probs, const DenseMatrix& targets, double clamp = 1e-7);

    const DenseMatrix& value(Var v) const;
    const DenseMatrix& grad(Var v) const;
    double scalar(Var v) const;

    /// Reverse pass from a 1x1 loss. Populates node grads and accumulates
    /// parameter gradients into the bound ParamStore.
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        DenseMatrix value;
        DenseMatrix grad;
        std::function<void()> backprop;  // empty for leaves
        ParamStore* store = nullptr;
        int slot = -1;
        const char* op = "";
    };

    Var push(DenseMatrix value, const char* op, std::function<void()> backprop = {});
    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
    const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
    void check_value_finite(const Node& n) const;

    std::vector<Node> nodes_;
};

/// Sum in ascending value order: invariant to the input ordering of addends.
double setwise_sum(std::vector<double>& scratch);

/// Max over parameters of |analytic - central difference| /
/// (|analytic| + |central| + 1e-12), with central differences of size `step`
/// taken on every parameter entry. `build` must construct the loss from
/// scratch on the given tape.
double finite_diff_check(ParamStore& params, const std::function<Var(Tape&)>& build, double step);

}  // namespace dampe
