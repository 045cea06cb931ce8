#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dampe/matrix.hpp"
#include "dampe/rng.hpp"
#include "dampe/tape.hpp"

namespace dampe {

/// Mixture-of-Experts condition encoder: softmax gate over K affine experts,
/// fused output is the gate-weighted sum of expert outputs (dense routing).
class MoeEncoder {
public:
    MoeEncoder(std::size_t input_dim, std::size_t output_dim, std::size_t n_experts,
               std::string prefix = "moe");

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t n_experts() const { return n_experts_; }
    const std::string& prefix() const { return prefix_; }

    /// Registers parameters: gate at zero (uniform routing at start), experts
    /// with fan-in-scaled random init.
    void init_params(ParamStore& store, Rng& rng) const;

    /// Names of all parameters owned by this encoder (checkpoint subset).
    std::vector<std::string> param_names() const;

    /// Differentiable encode of a batch of rows (rows x input_dim).
    Var encode(Tape& tape, ParamStore& store, Var h_rows) const;

    /// Pure inference paths (no tape).
    DenseMatrix gate_probs(const ParamStore& store, const DenseMatrix& h_rows) const;
    DenseMatrix encode_rows(const ParamStore& store, const DenseMatrix& h_rows) const;

private:
    std::size_t input_dim_, output_dim_, n_experts_;
    std::string prefix_;
    std::string gate_w() const { return prefix_ + ".gate.w"; }
    std::string gate_b() const { return prefix_ + ".gate.b"; }
    std::string expert_w(std::size_t k) const;
    std::string expert_b(std::size_t k) const;
};

}  // namespace dampe
