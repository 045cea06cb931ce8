#include "dampe/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "dampe/error.hpp"

namespace dampe {

Classifier::Classifier(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_terms,
                       std::string prefix)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), n_terms_(n_terms),
      prefix_(std::move(prefix)) {}

void Classifier::init_params(ParamStore& store, Rng& rng) const {
    auto init = [&rng](std::size_t r, std::size_t c) {
        DenseMatrix w(r, c);
        const double scale = 1.0 / std::sqrt(static_cast<double>(r));
        for (double& x : w.data) x = scale * rng.normal();
        return w;
    };
    store.add(prefix_ + ".w1", init(input_dim_, hidden_dim_));
    store.add(prefix_ + ".b1", DenseMatrix::zeros(1, hidden_dim_));
    store.add(prefix_ + ".w2", init(hidden_dim_, n_terms_));
    store.add(prefix_ + ".b2", DenseMatrix::zeros(1, n_terms_));
}

std::vector<std::string> Classifier::param_names() const {
    return {prefix_ + ".w1", prefix_ + ".b1", prefix_ + ".w2", prefix_ + ".b2"};
}

Var Classifier::logits(Tape& tape, ParamStore& store, Var h_tilde) const {
    Var h = tape.add_rowvec(tape.matmul(h_tilde, tape.param(store, prefix_ + ".w1")),
                            tape.param(store, prefix_ + ".b1"));
    h = tape.tanh(h);
    return tape.add_rowvec(tape.matmul(h, tape.param(store, prefix_ + ".w2")),
                           tape.param(store, prefix_ + ".b2"));
}

DenseMatrix Classifier::predict_probs(const ParamStore& store, const DenseMatrix& h_tilde) const {
    DenseMatrix h = matmul(h_tilde, store.value(prefix_ + ".w1"));
    const DenseMatrix& b1 = store.value(prefix_ + ".b1");
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < h.cols; ++j) h.at(i, j) = std::tanh(h.at(i, j) + b1.data[j]);
    DenseMatrix out = matmul(h, store.value(prefix_ + ".w2"));
    const DenseMatrix& b2 = store.value(prefix_ + ".b2");
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j)
            out.at(i, j) = 1.0 / (1.0 + std::exp(-(out.at(i, j) + b2.data[j])));
    return out;
}

void LabelMatrix::verify_true_path(const GoDag& dag) const {
    check_data(y.cols == dag.n_terms, "LabelMatrix: term count mismatch");
    for (std::size_t p = 0; p < y.rows; ++p)
        for (std::size_t tau = 0; tau < y.cols; ++tau) {
            if (y.at(p, tau) == 0.0) continue;
            for (std::uint32_t parent : dag.parents[tau])
                check_data(y.at(p, parent) == 1.0,
                           "LabelMatrix: label set not closed under ancestors");
        }
}

double finetune_step(const MoeEncoder& moe, const Classifier& clf, ParamStore& params,
                     AdamW& opt, double lr, const DenseMatrix& h_rows,
                     const DenseMatrix& label_rows, double prob_clamp) {
    check_contract(h_rows.rows == label_rows.rows, "finetune_step: batch row mismatch");
    params.zero_grad();
    Tape tape;
    Var h = tape.constant(h_rows, "h_batch");
    Var h_tilde = moe.encode(tape, params, h);
    Var probs = tape.sigmoid(clf.logits(tape, params, h_tilde));
    Var loss = tape.bce_mean(probs, label_rows, prob_clamp);
    const double value = tape.scalar(loss);
    tape.backward(loss);
    opt.step(params, lr);
    return value;
}

DenseMatrix true_path_propagate(const DenseMatrix& preds, const GoDag& dag) {
    check_contract(preds.cols == dag.n_terms, "true_path_propagate: term count mismatch");
    const auto order = dag.topo_order();  // descendants before ancestors
    DenseMatrix out = preds;
    for (std::uint32_t tau : order)
        for (std::uint32_t child : dag.children[tau])
            for (std::size_t p = 0; p < out.rows; ++p)
                out.at(p, tau) = std::max(out.at(p, tau), out.at(p, child));
    return out;
}

std::pair<double, double> fmax(const DenseMatrix& preds, const DenseMatrix& labels) {
    check_contract(preds.same_shape(labels), "fmax: shape mismatch");
    std::size_t labeled = 0;
    for (std::size_t p = 0; p < labels.rows; ++p) {
        for (std::size_t t = 0; t < labels.cols; ++t)
            if (labels.at(p, t) == 1.0) {
                ++labeled;
                break;
            }
    }
    check_contract(labeled > 0, "fmax: no labeled protein");

    double best_f = 0.0, best_tau = 0.0;
    for (int step = 0; step <= 100; ++step) {
        const double tau = static_cast<double>(step) / 100.0;
        double precision_sum = 0.0, recall_sum = 0.0;
        std::size_t with_pred = 0;
        for (std::size_t p = 0; p < preds.rows; ++p) {
            std::size_t tp = 0, pred = 0, truth = 0;
            for (std::size_t t = 0; t < preds.cols; ++t) {
                // A zero score is never a prediction, so the tau = 0 grid
                // point does not trivially predict everything.
                const bool hit = preds.at(p, t) >= tau && preds.at(p, t) > 0.0;
                const bool lab = labels.at(p, t) == 1.0;
                pred += hit;
                truth += lab;
                tp += hit && lab;
            }
            if (pred > 0) {
                ++with_pred;
                precision_sum += static_cast<double>(tp) / static_cast<double>(pred);
            }
            if (truth > 0) recall_sum += static_cast<double>(tp) / static_cast<double>(truth);
        }
        const double precision =
            with_pred > 0 ? precision_sum / static_cast<double>(with_pred) : 0.0;
        const double recall = recall_sum / static_cast<double>(labeled);
        const double denom = precision + recall;
        const double f = denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
        if (f > best_f) {
            best_f = f;
            best_tau = tau;
        }
    }
    return {best_f, best_tau};
}

double aupr(const DenseMatrix& preds, const DenseMatrix& labels) {
    check_contract(preds.same_shape(labels), "aupr: shape mismatch");
    std::vector<std::pair<double, int>> scored;  // (score, is_positive)
    scored.reserve(preds.size());
    std::size_t positives = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int pos = labels.data[i] == 1.0 ? 1 : 0;
        positives += pos;
        scored.emplace_back(preds.data[i], pos);
    }
    check_contract(positives > 0, "aupr: no positive pair");
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    // Step-wise area: sum over distinct-score blocks of delta-recall times
    // the precision after the block.
    double area = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0, seen = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            tp += scored[j].second;
            ++seen;
            ++j;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return area;
}

}  // namespace dampe
