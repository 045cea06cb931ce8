#pragma once

#include <cstddef>
#include <vector>

#include "dampe/matrix.hpp"
#include "dampe/tape.hpp"

namespace dampe {

/// AdamW with decoupled weight decay (decay scales the parameter directly,
/// never the gradient).
class AdamW {
public:
    struct Hyper {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    AdamW() = default;
    explicit AdamW(const Hyper& h) : hyper_(h) {}

    Hyper& hyper() { return hyper_; }
    const Hyper& hyper() const { return hyper_; }
    std::size_t step_count() const { return step_; }

    /// One update over every parameter in the store from its current grads.
    /// `lr_override` < 0 means use hyper().lr (scheduled rates pass here).
    void step(ParamStore& params, double lr_override = -1.0);

private:
    Hyper hyper_;
    std::size_t step_ = 0;
    std::vector<DenseMatrix> m_;  // first moments, one per parameter slot
    std::vector<DenseMatrix> v_;  // second moments
};

/// One-cycle schedule: linear ramp from peak/25 to peak over the warmup
/// fraction, then cosine decay down to peak/1000 at the final step.
struct OneCycle {
    double peak = 1e-3;
    double warmup_fraction = 0.1;  // in (0, 1)
    std::size_t total_steps = 1;

    static constexpr double kStartDivisor = 25.0;
    static constexpr double kFinalDivisor = 1000.0;

    double rate(std::size_t step) const;
};

}  // namespace dampe
