#include "dampe/tape.hpp"

#include <algorithm>
#include <cmath>

#include "dampe/error.hpp"

namespace dampe {

int ParamStore::add(const std::string& name, DenseMatrix init) {
    auto it = index_.find(name);
    if (it != index_.end()) {
        check_contract(values_[it->second].same_shape(init),
                       "ParamStore::add: shape mismatch for existing parameter " + name);
        return it->second;
    }
    const int slot = static_cast<int>(values_.size());
    names_.push_back(name);
    index_.emplace(name, slot);
    grads_.emplace_back(DenseMatrix::zeros(init.rows, init.cols));
    values_.push_back(std::move(init));
    return slot;
}

int ParamStore::slot(const std::string& name) const {
    auto it = index_.find(name);
    check_contract(it != index_.end(), "ParamStore: unknown parameter " + name);
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& g : grads_) g.fill(0.0);
}

double setwise_sum(std::vector<double>& scratch) {
    std::sort(scratch.begin(), scratch.end());
    double s = 0.0;
    for (double v : scratch) s += v;
    return s;
}

Var Tape::push(DenseMatrix value, const char* op, std::function<void()> backprop) {
    Node n;
    n.value = std::move(value);
    n.backprop = std::move(backprop);
    n.op = op;
    check_value_finite(n);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_value_finite(const Node& n) const {
    if (!n.value.all_finite())
        throw NumericFault(std::string("non-finite value produced by op '") + n.op + "'");
}

Var Tape::constant(DenseMatrix value, const std::string&) {
    return push(std::move(value), "constant");
}

Var Tape::param(ParamStore& store, int slot) {
    Var v = push(store.value(slot), "param");
    node(v).store = &store;
    node(v).slot = slot;
    return v;
}

const DenseMatrix& Tape::value(Var v) const { return node(v).value; }
const DenseMatrix& Tape::grad(Var v) const { return node(v).grad; }

double Tape::scalar(Var v) const {
    const DenseMatrix& m = node(v).value;
    check_contract(m.rows == 1 && m.cols == 1, "scalar: node is not 1x1");
    return m.data[0];
}

Var Tape::add(Var a, Var b) {
    const DenseMatrix &A = value(a), &B = value(b);
    check_contract(A.same_shape(B), "add: shape mismatch");
    DenseMatrix out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
    Var v = push(std::move(out), "add");
    nodes_.back().backprop = [this, v, a, b] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix &ga = node(a).grad, &gb = node(b).grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    };
    return v;
}

Var Tape::sub(Var a, Var b) {
    const DenseMatrix &A = value(a), &B = value(b);
    check_contract(A.same_shape(B), "sub: shape mismatch");
    DenseMatrix out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
    Var v = push(std::move(out), "sub");
    nodes_.back().backprop = [this, v, a, b] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix &ga = node(a).grad, &gb = node(b).grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] -= g.data[i];
        }
    };
    return v;
}

Var Tape::mul(Var a, Var b) {
    const DenseMatrix &A = value(a), &B = value(b);
    check_contract(A.same_shape(B), "mul: shape mismatch");
    DenseMatrix out = A;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
    Var v = push(std::move(out), "mul");
    nodes_.back().backprop = [this, v, a, b] {
        const DenseMatrix& g = node(v).grad;
        const DenseMatrix &A = node(a).value, &B = node(b).value;
        DenseMatrix &ga = node(a).grad, &gb = node(b).grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data[i] += g.data[i] * B.data[i];
            gb.data[i] += g.data[i] * A.data[i];
        }
    };
    return v;
}

Var Tape::scale(Var a, double c) { return affine(a, c, 0.0); }

Var Tape::affine(Var a, double mul, double shift) {
    DenseMatrix out = value(a);
    for (double& x : out.data) x = mul * x + shift;
    Var v = push(std::move(out), "affine");
    nodes_.back().backprop = [this, v, a, mul] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += mul * g.data[i];
    };
    return v;
}

Var Tape::add_rowvec(Var a, Var r) {
    const DenseMatrix &A = value(a), &R = value(r);
    check_contract(R.rows == 1 && R.cols == A.cols, "add_rowvec: r must be 1 x cols");
    DenseMatrix out = A;
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) out.at(i, j) += R.data[j];
    Var v = push(std::move(out), "add_rowvec");
    nodes_.back().backprop = [this, v, a, r] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix &ga = node(a).grad, &gr = node(r).grad;
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) {
                ga.at(i, j) += g.at(i, j);
                gr.data[j] += g.at(i, j);
            }
    };
    return v;
}

Var Tape::mul_rowvec(Var a, Var r) {
    const DenseMatrix &A = value(a), &R = value(r);
    check_contract(R.rows == 1 && R.cols == A.cols, "mul_rowvec: r must be 1 x cols");
    DenseMatrix out = A;
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) out.at(i, j) *= R.data[j];
    Var v = push(std::move(out), "mul_rowvec");
    nodes_.back().backprop = [this, v, a, r] {
        const DenseMatrix& g = node(v).grad;
        const DenseMatrix &A = node(a).value, &R = node(r).value;
        DenseMatrix &ga = node(a).grad, &gr = node(r).grad;
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) {
                ga.at(i, j) += g.at(i, j) * R.data[j];
                gr.data[j] += g.at(i, j) * A.at(i, j);
            }
    };
    return v;
}

Var Tape::mul_colvec(Var a, Var c) {
    const DenseMatrix &A = value(a), &C = value(c);
    check_contract(C.cols == 1 && C.rows == A.rows, "mul_colvec: c must be rows x 1");
    DenseMatrix out = A;
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) out.at(i, j) *= C.data[i];
    Var v = push(std::move(out), "mul_colvec");
    nodes_.back().backprop = [this, v, a, c] {
        const DenseMatrix& g = node(v).grad;
        const DenseMatrix &A = node(a).value, &C = node(c).value;
        DenseMatrix &ga = node(a).grad, &gc = node(c).grad;
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) {
                ga.at(i, j) += g.at(i, j) * C.data[i];
                gc.data[i] += g.at(i, j) * A.at(i, j);
            }
    };
    return v;
}

Var Tape::matmul(Var a, Var b) {
    Var v = push(dampe::matmul(value(a), value(b)), "matmul");
    nodes_.back().backprop = [this, v, a, b] {
        const DenseMatrix& g = node(v).grad;
        const DenseMatrix &A = node(a).value, &B = node(b).value;
        // dA += g B^T ; dB += A^T g
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t k = 0; k < A.cols; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < B.cols; ++j) s += g.at(i, j) * B.at(k, j);
                ga.at(i, k) += s;
            }
        DenseMatrix& gb = node(b).grad;
        for (std::size_t k = 0; k < B.rows; ++k)
            for (std::size_t j = 0; j < B.cols; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < A.rows; ++i) s += A.at(i, k) * g.at(i, j);
                gb.at(k, j) += s;
            }
    };
    return v;
}

Var Tape::transpose(Var a) {
    Var v = push(dampe::transpose(value(a)), "transpose");
    nodes_.back().backprop = [this, v, a] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
    };
    return v;
}

Var Tape::concat_cols(Var a, Var b) {
    const DenseMatrix &A = value(a), &B = value(b);
    check_contract(A.rows == B.rows, "concat_cols: row mismatch");
    DenseMatrix out(A.rows, A.cols + B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        std::copy(A.row_ptr(i), A.row_ptr(i) + A.cols, out.row_ptr(i));
        std::copy(B.row_ptr(i), B.row_ptr(i) + B.cols, out.row_ptr(i) + A.cols);
    }
    Var v = push(std::move(out), "concat_cols");
    const std::size_t ac = A.cols;
    nodes_.back().backprop = [this, v, a, b, ac] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix &ga = node(a).grad, &gb = node(b).grad;
        for (std::size_t i = 0; i < g.rows; ++i) {
            for (std::size_t j = 0; j < ac; ++j) ga.at(i, j) += g.at(i, j);
            for (std::size_t j = ac; j < g.cols; ++j) gb.at(i, j - ac) += g.at(i, j);
        }
    };
    return v;
}

Var Tape::slice_cols(Var a, std::size_t lo, std::size_t hi) {
    const DenseMatrix& A = value(a);
    check_contract(lo < hi && hi <= A.cols, "slice_cols: bad range");
    DenseMatrix out(A.rows, hi - lo);
    for (std::size_t i = 0; i < A.rows; ++i)
        std::copy(A.row_ptr(i) + lo, A.row_ptr(i) + hi, out.row_ptr(i));
    Var v = push(std::move(out), "slice_cols");
    nodes_.back().backprop = [this, v, a, lo] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) ga.at(i, lo + j) += g.at(i, j);
    };
    return v;
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> idx) {
    const DenseMatrix& A = value(a);
    for (std::size_t i : idx) check_contract(i < A.rows, "gather_rows: index out of range");
    DenseMatrix out(idx.size(), A.cols);
    for (std::size_t k = 0; k < idx.size(); ++k)
        std::copy(A.row_ptr(idx[k]), A.row_ptr(idx[k]) + A.cols, out.row_ptr(k));
    Var v = push(std::move(out), "gather_rows");
    nodes_.back().backprop = [this, v, a, idx = std::move(idx)] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t k = 0; k < idx.size(); ++k)
            for (std::size_t j = 0; j < g.cols; ++j) ga.at(idx[k], j) += g.at(k, j);
    };
    return v;
}

Var Tape::sigmoid(Var a) {
    DenseMatrix out = value(a);
    for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
    Var v = push(std::move(out), "sigmoid");
    nodes_.back().backprop = [this, v, a] {
        const DenseMatrix &g = node(v).grad, &Y = node(v).value;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.data[i] += g.data[i] * Y.data[i] * (1.0 - Y.data[i]);
    };
    return v;
}

Var Tape::tanh(Var a) {
    DenseMatrix out = value(a);
    for (double& x : out.data) x = std::tanh(x);
    Var v = push(std::move(out), "tanh");
    nodes_.back().backprop = [this, v, a] {
        const DenseMatrix &g = node(v).grad, &Y = node(v).value;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.data[i] += g.data[i] * (1.0 - Y.data[i] * Y.data[i]);
    };
    return v;
}

Var Tape::softmax_rows(Var a) {
    const DenseMatrix& A = value(a);
    DenseMatrix out(A.rows, A.cols);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* row = A.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < A.cols; ++j) mx = std::max(mx, row[j]);
        scratch.assign(A.cols, 0.0);
        for (std::size_t j = 0; j < A.cols; ++j) scratch[j] = std::exp(row[j] - mx);
        std::vector<double> exps = scratch;
        const double z = setwise_sum(scratch);
        for (std::size_t j = 0; j < A.cols; ++j) out.at(i, j) = exps[j] / z;
    }
    Var v = push(std::move(out), "softmax_rows");
    nodes_.back().backprop = [this, v, a] {
        const DenseMatrix &g = node(v).grad, &Y = node(v).value;
        DenseMatrix& ga = node(a).grad;
        for (std::size_t i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) dot += g.at(i, j) * Y.at(i, j);
            for (std::size_t j = 0; j < g.cols; ++j)
                ga.at(i, j) += Y.at(i, j) * (g.at(i, j) - dot);
        }
    };
    return v;
}

Var Tape::layer_norm_rows(Var a, Var gamma, Var beta, double eps) {
    const DenseMatrix &A = value(a), &G = value(gamma), &B = value(beta);
    check_contract(G.rows == 1 && G.cols == A.cols && B.rows == 1 && B.cols == A.cols,
                   "layer_norm_rows: gamma/beta must be 1 x cols");
    const std::size_t n = A.cols;
    DenseMatrix out(A.rows, n);
    DenseMatrix xhat(A.rows, n);
    std::vector<double> inv_std(A.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* row = A.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            xhat.at(i, j) = (row[j] - mean) * is;
            out.at(i, j) = xhat.at(i, j) * G.data[j] + B.data[j];
        }
    }
    Var v = push(std::move(out), "layer_norm_rows");
    nodes_.back().backprop = [this, v, a, gamma, beta, xhat = std::move(xhat),
                              inv_std = std::move(inv_std)] {
        const DenseMatrix& g = node(v).grad;
        const DenseMatrix& G = node(gamma).value;
        DenseMatrix &ga = node(a).grad, &gg = node(gamma).grad, &gb = node(beta).grad;
        const std::size_t n = g.cols;
        for (std::size_t i = 0; i < g.rows; ++i) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dy = g.at(i, j) * G.data[j];
                sum_dy += dy;
                sum_dy_xhat += dy * xhat.at(i, j);
                gg.data[j] += g.at(i, j) * xhat.at(i, j);
                gb.data[j] += g.at(i, j);
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double dy = g.at(i, j) * G.data[j];
                ga.at(i, j) += inv_std[i] * (dy - inv_n * sum_dy - xhat.at(i, j) * inv_n * sum_dy_xhat);
            }
        }
    };
    return v;
}

Var Tape::scatter_pairs(Var values, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                        std::size_t n) {
    const DenseMatrix& V = value(values);
    check_contract(V.cols == 1 && V.rows == pairs.size(), "scatter_pairs: values must be m x 1");
    DenseMatrix out(n, n, 0.0);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        check_contract(pairs[k].first < n && pairs[k].second < n && pairs[k].first != pairs[k].second,
                       "scatter_pairs: bad pair");
        out.at(pairs[k].first, pairs[k].second) = V.data[k];
    }
    Var v = push(std::move(out), "scatter_pairs");
    nodes_.back().backprop = [this, v, values, pairs] {
        const DenseMatrix& g = node(v).grad;
        DenseMatrix& gv = node(values).grad;
        for (std::size_t k = 0; k < pairs.size(); ++k)
            gv.data[k] += g.at(pairs[k].first, pairs[k].second);
    };
    return v;
}

Var Tape::matmul_setsum(Var a, Var b) {
    const DenseMatrix &A = value(a), &B = value(b);
    check_contract(A.cols == B.rows, "matmul_setsum: inner dimensions disagree");
    DenseMatrix out(A.rows, B.cols);
    std::vector<double> scratch(A.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < B.cols; ++j) {
            for (std::size_t k = 0; k < A.cols; ++k) scratch[k] = A.at(i, k) * B.at(k, j);
            out.at(i, j) = setwise_sum(scratch);
        }
    Var v = push(std::move(out), "matmul_setsum");
    nodes_.back().backprop = [this, v, a, b] {
        const DenseMatrix& g = node(v).grad;
        const DenseMatrix &A = node(a).value, &B = node(b).value;
        DenseMatrix &ga = node(a).grad, &gb = node(b).grad;
        for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t k = 0; k < A.cols; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < B.cols; ++j) s += g.at(i, j) * B.at(k, j);
                ga.at(i, k) += s;
            }
        for (std::size_t k = 0; k < B.rows; ++k)
            for (std::size_t j = 0; j < B.cols; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < A.rows; ++i) s += A.at(i, k) * g.at(i, j);
                gb.at(k, j) += s;
            }
    };
    return v;
}

Var Tape::mean_all(Var a) {
    const DenseMatrix& A = value(a);
    check_contract(A.size() > 0, "mean_all: empty matrix");
    double s = 0.0;
    for (double x : A.data) s += x;
    DenseMatrix out(1, 1);
    out.data[0] = s / static_cast<double>(A.size());
    Var v = push(std::move(out), "mean_all");
    nodes_.back().backprop = [this, v, a] {
        const double g = node(v).grad.data[0] / static_cast<double>(node(a).value.size());
        DenseMatrix& ga = node(a).grad;
        for (double& x : ga.data) x += g;
    };
    return v;
}

Var Tape::sum_all(Var a) {
    const DenseMatrix& A = value(a);
    double s = 0.0;
    for (double x : A.data) s += x;
    DenseMatrix out(1, 1);
    out.data[0] = s;
    Var v = push(std::move(out), "sum_all");
    nodes_.back().backprop = [this, v, a] {
        const double g = node(v).grad.data[0];
        DenseMatrix& ga = node(a).grad;
        for (double& x : ga.data) x += g;
    };
    return v;
}

Var Tape::mean_ce_with_logits(Var logits, const DenseMatrix& onehot) {
    const DenseMatrix& L = value(logits);
    check_contract(L.same_shape(onehot), "mean_ce_with_logits: shape mismatch");
    check_contract(L.rows > 0, "mean_ce_with_logits: empty input");
    // CE via log-softmax; also cache softmax for the backward pass.
    DenseMatrix soft(L.rows, L.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < L.rows; ++i) {
        const double* row = L.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < L.cols; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < L.cols; ++j) z += std::exp(row[j] - mx);
        const double logz = mx + std::log(z);
        for (std::size_t j = 0; j < L.cols; ++j) {
            soft.at(i, j) = std::exp(row[j] - logz);
            total -= onehot.at(i, j) * (row[j] - logz);
        }
    }
    DenseMatrix out(1, 1);
    out.data[0] = total / static_cast<double>(L.rows);
    Var v = push(std::move(out), "mean_ce_with_logits");
    nodes_.back().backprop = [this, v, logits, soft = std::move(soft), onehot] {
        const double g = node(v).grad.data[0] / static_cast<double>(soft.rows);
        DenseMatrix& gl = node(logits).grad;
        for (std::size_t i = 0; i < soft.size(); ++i)
            gl.data[i] += g * (soft.data[i] - onehot.data[i]);
    };
    return v;
}

Var Tape::bce_mean(Var probs, const DenseMatrix& targets, double clamp) {
    const DenseMatrix& P = value(probs);
    check_contract(P.same_shape(targets), "bce_mean: shape mismatch");
    check_contract(P.size() > 0, "bce_mean: empty input");
    const double lo = clamp, hi = 1.0 - clamp;
    double total = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double p = std::min(hi, std::max(lo, P.data[i]));
        const double y = targets.data[i];
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    DenseMatrix out(1, 1);
    out.data[0] = total / static_cast<double>(P.size());
    Var v = push(std::move(out), "bce_mean");
    nodes_.back().backprop = [this, v, probs, targets, lo, hi] {
        const DenseMatrix& P = node(probs).value;
        const double g = node(v).grad.data[0] / static_cast<double>(P.size());
        DenseMatrix& gp = node(probs).grad;
        for (std::size_t i = 0; i < P.size(); ++i) {
            const double p = P.data[i];
            if (p < lo || p > hi) continue;  // clamped region: zero slope
            const double y = targets.data[i];
            gp.data[i] += g * (-(y / p) + (1.0 - y) / (1.0 - p));
        }
    };
    return v;
}

void Tape::backward(Var loss) {
    Node& ln = node(loss);
    check_contract(ln.value.rows == 1 && ln.value.cols == 1, "backward: loss must be 1x1 scalar");
    for (Node& n : nodes_)
        if (n.grad.size() != n.value.size()) n.grad = DenseMatrix::zeros(n.value.rows, n.value.cols);
        else n.grad.fill(0.0);
    ln.grad.data[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backprop) n.backprop();
        if (n.store != nullptr) {
            DenseMatrix& pg = n.store->grad(n.slot);
            for (std::size_t k = 0; k < pg.size(); ++k) pg.data[k] += n.grad.data[k];
        }
    }
}

double finite_diff_check(ParamStore& params, const std::function<Var(Tape&)>& build, double step) {
    check_contract(step >= 1e-7 && step <= 1e-3, "finite_diff_check: step out of [1e-7, 1e-3]");
    params.zero_grad();
    {
        Tape tape;
        Var loss = build(tape);
        tape.backward(loss);
    }
    std::vector<DenseMatrix> analytic;
    analytic.reserve(params.count());
    for (std::size_t s = 0; s < params.count(); ++s) analytic.push_back(params.grad(static_cast<int>(s)));

    auto eval_loss = [&]() {
        Tape tape;
        Var loss = build(tape);
        const double v = tape.scalar(loss);
        if (!std::isfinite(v)) throw NumericFault("finite_diff_check: non-finite loss at perturbed point");
        return v;
    };

    double worst = 0.0;
    for (std::size_t s = 0; s < params.count(); ++s) {
        DenseMatrix& p = params.value(static_cast<int>(s));
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double orig = p.data[k];
            p.data[k] = orig + step;
            const double up = eval_loss();
            p.data[k] = orig - step;
            const double dn = eval_loss();
            p.data[k] = orig;
            const double central = (up - dn) / (2.0 * step);
            const double a = analytic[s].data[k];
            const double err = std::fabs(a - central) / (std::fabs(a) + std::fabs(central) + 1e-12);
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace dampe
