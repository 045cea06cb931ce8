#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "dampe/hetgraph.hpp"
#include "dampe/rng.hpp"

namespace dampe {

/// Per-step retention coefficients alpha_t and their running products
/// alpha_bar_t, t = 1..T (index 0 unused; alpha_bar_0 == 1 by convention).
struct NoiseSchedule {
    std::size_t T = 0;
    std::vector<double> alpha;      // size T+1
    std::vector<double> alpha_bar;  // size T+1, alpha_bar[0] == 1

    double alpha_at(std::size_t t) const { return alpha[t]; }
    double alpha_bar_at(std::size_t t) const { return alpha_bar[t]; }
};

using RelDist = std::array<double, kRelationCount>;

/// 4x4 row-stochastic transition matrix.
struct TransitionMatrix {
    std::array<std::array<double, kRelationCount>, kRelationCount> q{};
    double at(Relation from, Relation to) const {
        return q[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
    }
};

/// Shifted cosine schedule: alpha_bar_t = f(t)/f(0) with
/// f(t) = cos^2(((t/T + s)/(1+s)) * pi/2); alpha_t clamped to [1e-5, 1] and
/// alpha_bar recomputed as the running product of the clamped alphas.
NoiseSchedule cosine_schedule(std::size_t T, double shift = 0.008);

/// Q^(t) = alpha_t * I + (1 - alpha_t) * 1 m^T.
TransitionMatrix transition_matrix(const NoiseSchedule& schedule, std::size_t t, const RelDist& m);

/// Qbar^(t) = alpha_bar_t * I + (1 - alpha_bar_t) * 1 m^T.
TransitionMatrix cumulative_transition(const NoiseSchedule& schedule, std::size_t t,
                                       const RelDist& m);

/// Corrupts A0: each ordered pair's relation is drawn independently from the
/// row Qbar^(t)[A0_uv, .]. Deterministic per rng state.
AdjTensor forward_sample(const AdjTensor& a0, const NoiseSchedule& schedule, std::size_t t,
                         const RelDist& m, Rng& rng);

/// q(r' at t-1 | r0, rt) proportional to Q^(t)[r', rt] * Qbar^(t-1)[r0, r'].
/// By convention the t = 1 posterior is a point mass at r0.
RelDist posterior_distribution(Relation r0, Relation rt, const NoiseSchedule& schedule,
                               std::size_t t, const RelDist& m);

/// One reverse step: per pair, mixes the exact posterior over candidate r0
/// weighted by p0_hat (rows of per-pair distributions in ordered_pairs order),
/// then samples. p0_hat rows must sum to 1 within 1e-6.
AdjTensor reverse_step(const std::vector<RelDist>& p0_hat, const AdjTensor& at,
                       const NoiseSchedule& schedule, std::size_t t, const RelDist& m, Rng& rng);

}  // namespace dampe
