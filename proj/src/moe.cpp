#include "dampe/moe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dampe/error.hpp"

namespace dampe {

MoeEncoder::MoeEncoder(std::size_t input_dim, std::size_t output_dim, std::size_t n_experts,
                       std::string prefix)
    : input_dim_(input_dim), output_dim_(output_dim), n_experts_(n_experts),
      prefix_(std::move(prefix)) {
    check_contract(n_experts_ >= 1, "MoeEncoder: need at least one expert");
}

std::string MoeEncoder::expert_w(std::size_t k) const {
    return prefix_ + ".expert" + std::to_string(k) + ".w";
}

std::string MoeEncoder::expert_b(std::size_t k) const {
    return prefix_ + ".expert" + std::to_string(k) + ".b";
}

void MoeEncoder::init_params(ParamStore& store, Rng& rng) const {
    store.add(gate_w(), DenseMatrix::zeros(input_dim_, n_experts_));
    store.add(gate_b(), DenseMatrix::zeros(1, n_experts_));
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim_));
    for (std::size_t k = 0; k < n_experts_; ++k) {
        DenseMatrix w(input_dim_, output_dim_);
        for (double& x : w.data) x = scale * rng.normal();
        store.add(expert_w(k), std::move(w));
        store.add(expert_b(k), DenseMatrix::zeros(1, output_dim_));
    }
}

std::vector<std::string> MoeEncoder::param_names() const {
    std::vector<std::string> names{gate_w(), gate_b()};
    for (std::size_t k = 0; k < n_experts_; ++k) {
        names.push_back(expert_w(k));
        names.push_back(expert_b(k));
    }
    return names;
}

Var MoeEncoder::encode(Tape& tape, ParamStore& store, Var h_rows) const {
    check_contract(tape.value(h_rows).cols == input_dim_, "MoeEncoder::encode: input width");
    Var logits = tape.add_rowvec(tape.matmul(h_rows, tape.param(store, gate_w())),
                                 tape.param(store, gate_b()));
    Var gates = tape.softmax_rows(logits);
    Var out{-1};
    for (std::size_t k = 0; k < n_experts_; ++k) {
        Var fk = tape.add_rowvec(tape.matmul(h_rows, tape.param(store, expert_w(k))),
                                 tape.param(store, expert_b(k)));
        Var weighted = tape.mul_colvec(fk, tape.slice_cols(gates, k, k + 1));
        out = k == 0 ? weighted : tape.add(out, weighted);
    }
    return out;
}

DenseMatrix MoeEncoder::gate_probs(const ParamStore& store, const DenseMatrix& h_rows) const {
    check_contract(h_rows.cols == input_dim_, "gate_probs: input width");
    DenseMatrix logits = matmul(h_rows, store.value(gate_w()));
    const DenseMatrix& b = store.value(gate_b());
    DenseMatrix out(h_rows.rows, n_experts_);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n_experts_; ++k)
            mx = std::max(mx, logits.at(i, k) + b.data[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < n_experts_; ++k) {
            out.at(i, k) = std::exp(logits.at(i, k) + b.data[k] - mx);
            z += out.at(i, k);
        }
        for (std::size_t k = 0; k < n_experts_; ++k) out.at(i, k) /= z;
    }
    return out;
}

DenseMatrix MoeEncoder::encode_rows(const ParamStore& store, const DenseMatrix& h_rows) const {
    const DenseMatrix gates = gate_probs(store, h_rows);
    DenseMatrix out(h_rows.rows, output_dim_, 0.0);
    for (std::size_t k = 0; k < n_experts_; ++k) {
        DenseMatrix fk = matmul(h_rows, store.value(expert_w(k)));
        const DenseMatrix& b = store.value(expert_b(k));
        for (std::size_t i = 0; i < out.rows; ++i) {
            const double g = gates.at(i, k);
            for (std::size_t j = 0; j < output_dim_; ++j)
                out.at(i, j) += g * (fk.at(i, j) + b.data[j]);
        }
    }
    return out;
}

}  // namespace dampe
