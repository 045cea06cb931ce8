#include "dampe/optim.hpp"

#include <cmath>

#include "dampe/error.hpp"

namespace dampe {

void AdamW::step(ParamStore& params, double lr_override) {
    const double lr = lr_override < 0.0 ? hyper_.lr : lr_override;
    if (m_.size() < params.count()) {
        for (std::size_t s = m_.size(); s < params.count(); ++s) {
            const DenseMatrix& p = params.value(static_cast<int>(s));
            m_.push_back(DenseMatrix::zeros(p.rows, p.cols));
            v_.push_back(DenseMatrix::zeros(p.rows, p.cols));
        }
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(hyper_.beta1, t);
    const double bc2 = 1.0 - std::pow(hyper_.beta2, t);
    for (std::size_t s = 0; s < params.count(); ++s) {
        DenseMatrix& p = params.value(static_cast<int>(s));
        const DenseMatrix& g = params.grad(static_cast<int>(s));
        check_contract(p.same_shape(g) && p.same_shape(m_[s]), "AdamW: shape mismatch");
        DenseMatrix& m = m_[s];
        DenseMatrix& v = v_[s];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m.data[k] = hyper_.beta1 * m.data[k] + (1.0 - hyper_.beta1) * g.data[k];
            v.data[k] = hyper_.beta2 * v.data[k] + (1.0 - hyper_.beta2) * g.data[k] * g.data[k];
            const double mhat = m.data[k] / bc1;
            const double vhat = v.data[k] / bc2;
            p.data[k] -= lr * hyper_.weight_decay * p.data[k];
            p.data[k] -= lr * mhat / (std::sqrt(vhat) + hyper_.eps);
        }
    }
}

double OneCycle::rate(std::size_t step) const {
    check_contract(total_steps >= 1, "OneCycle: total_steps must be >= 1");
    check_contract(step < total_steps, "OneCycle: step out of range");
    check_contract(warmup_fraction > 0.0 && warmup_fraction < 1.0,
                   "OneCycle: warmup fraction must lie in (0,1)");
    const double start = peak / kStartDivisor;
    const double final_rate = peak / kFinalDivisor;
    if (total_steps == 1) return peak;
    const std::size_t last = total_steps - 1;
    std::size_t warm_end = static_cast<std::size_t>(std::llround(warmup_fraction * static_cast<double>(last)));
    if (warm_end < 1) warm_end = 1;
    if (warm_end > last) warm_end = last;
    if (step <= warm_end) {
        const double u = static_cast<double>(step) / static_cast<double>(warm_end);
        return start + (peak - start) * u;
    }
    const double u = static_cast<double>(step - warm_end) / static_cast<double>(last - warm_end);
    const double cosv = 0.5 * (1.0 + std::cos(3.14159265358979323846 * u));
    return final_rate + (peak - final_rate) * cosv;
}

}  // namespace dampe
