#include "dampe/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "dampe/error.hpp"

namespace dampe {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlphaFloor = 1e-5;

void check_marginal(const RelDist& m) {
    double s = 0.0;
    for (double v : m) {
        check_contract(v >= 0.0, "relation marginal has a negative entry");
        s += v;
    }
    check_contract(std::fabs(s - 1.0) < 1e-9, "relation marginal must sum to 1");
}

TransitionMatrix mix_with_marginal(double keep, const RelDist& m) {
    TransitionMatrix q;
    for (std::size_t r = 0; r < kRelationCount; ++r)
        for (std::size_t c = 0; c < kRelationCount; ++c)
            q.q[r][c] = (r == c ? keep : 0.0) + (1.0 - keep) * m[c];
    return q;
}

}  // namespace

NoiseSchedule cosine_schedule(std::size_t T, double shift) {
    check_contract(T >= 1, "cosine_schedule: T must be >= 1");
    check_contract(shift >= 0.0, "cosine_schedule: shift must be >= 0");
    auto f = [&](double t) {
        const double x = ((t / static_cast<double>(T) + shift) / (1.0 + shift)) * kPi / 2.0;
        const double c = std::cos(x);
        return c * c;
    };
    const double f0 = f(0.0);
    NoiseSchedule s;
    s.T = T;
    s.alpha.assign(T + 1, 1.0);
    s.alpha_bar.assign(T + 1, 1.0);
    double prev_bar = 1.0;
    for (std::size_t t = 1; t <= T; ++t) {
        const double bar = f(static_cast<double>(t)) / f0;
        double a = bar / prev_bar;
        a = std::min(1.0, std::max(kAlphaFloor, a));
        s.alpha[t] = a;
        // Running product of the clamped alphas keeps the product identity
        // exact even where the cosine tail underflows.
        s.alpha_bar[t] = s.alpha_bar[t - 1] * a;
        prev_bar = bar;
    }
    return s;
}

TransitionMatrix transition_matrix(const NoiseSchedule& schedule, std::size_t t, const RelDist& m) {
    check_contract(t >= 1 && t <= schedule.T, "transition_matrix: t out of range");
    check_marginal(m);
    return mix_with_marginal(schedule.alpha[t], m);
}

TransitionMatrix cumulative_transition(const NoiseSchedule& schedule, std::size_t t,
                                       const RelDist& m) {
    check_contract(t >= 1 && t <= schedule.T, "cumulative_transition: t out of range");
    check_marginal(m);
    return mix_with_marginal(schedule.alpha_bar[t], m);
}

AdjTensor forward_sample(const AdjTensor& a0, const NoiseSchedule& schedule, std::size_t t,
                         const RelDist& m, Rng& rng) {
    const TransitionMatrix qbar = cumulative_transition(schedule, t, m);
    AdjTensor at(a0.n);
    for (std::size_t i = 0; i < a0.n; ++i)
        for (std::size_t j = 0; j < a0.n; ++j) {
            if (i == j) continue;
            const auto r0 = static_cast<std::size_t>(a0.at(i, j));
            const std::size_t r = rng.categorical(qbar.q[r0].data(), kRelationCount);
            at.set(i, j, static_cast<Relation>(r));
        }
    return at;
}

RelDist posterior_distribution(Relation r0, Relation rt, const NoiseSchedule& schedule,
                               std::size_t t, const RelDist& m) {
    check_contract(t >= 1 && t <= schedule.T, "posterior_distribution: t out of range");
    RelDist post{};
    if (t == 1) {
        post[static_cast<std::size_t>(r0)] = 1.0;
        return post;
    }
    const TransitionMatrix q = transition_matrix(schedule, t, m);
    const TransitionMatrix qbar_prev = cumulative_transition(schedule, t - 1, m);
    double z = 0.0;
    for (std::size_t r = 0; r < kRelationCount; ++r) {
        post[r] = q.q[r][static_cast<std::size_t>(rt)] *
                  qbar_prev.q[static_cast<std::size_t>(r0)][r];
        z += post[r];
    }
    if (!(z > 0.0)) throw NumericFault("posterior_distribution: zero normalizer");
    for (double& v : post) v /= z;
    return post;
}

AdjTensor reverse_step(const std::vector<RelDist>& p0_hat, const AdjTensor& at,
                       const NoiseSchedule& schedule, std::size_t t, const RelDist& m, Rng& rng) {
    const auto pairs = ordered_pairs(at.n);
    check_contract(p0_hat.size() == pairs.size(), "reverse_step: p0_hat row count mismatch");
    for (const RelDist& row : p0_hat) {
        double s = 0.0;
        for (double v : row) s += v;
        check_contract(std::fabs(s - 1.0) <= 1e-6, "reverse_step: p0_hat row not normalized");
    }
    AdjTensor out(at.n);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        const Relation rt = at.at(i, j);
        RelDist mix{};
        for (std::size_t r0 = 0; r0 < kRelationCount; ++r0) {
            if (p0_hat[k][r0] == 0.0) continue;
            const RelDist post =
                posterior_distribution(static_cast<Relation>(r0), rt, schedule, t, m);
            for (std::size_t r = 0; r < kRelationCount; ++r) mix[r] += p0_hat[k][r0] * post[r];
        }
        double z = 0.0;
        for (double v : mix) z += v;
        for (double& v : mix) v /= z;
        out.set(i, j, static_cast<Relation>(rng.categorical(mix.data(), kRelationCount)));
    }
    return out;
}

}  // namespace dampe
