#include "dampe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dampe/error.hpp"

namespace dampe {

double reconstruction_loss(const EdgeLogits& p_hat, const AdjTensor& a0) {
    const auto pairs = ordered_pairs(a0.n);
    check_contract(p_hat.logits.rows == pairs.size() && p_hat.logits.cols == kRelationCount,
                   "reconstruction_loss: logits shape mismatch");
    check_contract(!pairs.empty(), "reconstruction_loss: no ordered pairs");
    double total = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double* row = p_hat.logits.row_ptr(k);
        double mx = row[0];
        for (std::size_t r = 1; r < kRelationCount; ++r) mx = std::max(mx, row[r]);
        double z = 0.0;
        for (std::size_t r = 0; r < kRelationCount; ++r) z += std::exp(row[r] - mx);
        const auto r0 = static_cast<std::size_t>(a0.at(pairs[k].first, pairs[k].second));
        total -= row[r0] - mx - std::log(z);
    }
    return total / static_cast<double>(pairs.size());
}

DenseMatrix onehot_targets(const AdjTensor& a0) {
    const auto pairs = ordered_pairs(a0.n);
    DenseMatrix y(pairs.size(), kRelationCount, 0.0);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        y.at(k, static_cast<std::size_t>(a0.at(pairs[k].first, pairs[k].second))) = 1.0;
    return y;
}

PretrainLoop::PretrainLoop(const HetGraph& graph, const DenseMatrix& h_global,
                           const DenseMatrix& z_global, MoeEncoder moe, Denoiser denoiser,
                           ParamStore& params, TrainConfig cfg, std::uint64_t seed)
    : graph_(&graph), h_global_(&h_global), z_global_(&z_global), moe_(std::move(moe)),
      denoiser_(std::move(denoiser)), params_(&params), cfg_(cfg),
      schedule_(cosine_schedule(cfg.diffusion_steps, cfg.schedule_shift)),
      marginal_(relation_marginals(graph)),
      opt_(AdamW::Hyper{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay}), rng_(seed) {
    check_contract(cfg_.batch_size >= 1 && cfg_.steps >= 1, "TrainConfig: positive counts");
    check_contract(cfg_.cond_drop_prob >= 0.0 && cfg_.cond_drop_prob < 1.0,
                   "TrainConfig: drop probability in [0,1)");
}

LossRecord PretrainLoop::step() {
    const auto& proteins = graph_->protein_ids();
    check_contract(!proteins.empty(), "pretrain: graph has no proteins");

    const std::size_t t = 1 + static_cast<std::size_t>(rng_.uniform_index(cfg_.diffusion_steps));
    const bool conditioned = rng_.uniform() >= cfg_.cond_drop_prob;

    params_->zero_grad();
    Tape tape;
    Var batch_loss{-1};
    std::size_t used = 0;
    std::size_t attempts = 0;
    while (used < cfg_.batch_size) {
        check_contract(++attempts <= 16 * cfg_.batch_size,
                       "pretrain: could not sample non-degenerate ego-graphs");
        const std::uint32_t center =
            proteins[static_cast<std::size_t>(rng_.uniform_index(proteins.size()))];
        EgoGraph ego = sample_ego(*graph_, center, cfg_.hops, cfg_.fanout, rng_.next_u64(),
                                  cfg_.node_cap);
        if (ego.size() < 2) continue;  // isolated center: no pairs to reconstruct
        attach_features(ego, *graph_, *h_global_, *z_global_);
        const AdjTensor at = forward_sample(ego.adj, schedule_, t, marginal_, rng_);

        std::optional<Var> cond;
        if (conditioned) {
            Var h = tape.constant(ego.h_rows, "ego_h");
            cond = moe_.encode(tape, *params_, h);
        }
        Var logits = denoiser_.predict_logits(tape, *params_, ego, at, cond, t);
        Var loss = tape.mean_ce_with_logits(logits, onehot_targets(ego.adj));
        batch_loss = used == 0 ? loss : tape.add(batch_loss, loss);
        ++used;
    }
    if (cfg_.batch_size > 1)
        batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(cfg_.batch_size));
    const double loss_value = tape.scalar(batch_loss);
    tape.backward(batch_loss);
    opt_.step(*params_);

    ++step_index_;
    return LossRecord{step_index_, t, loss_value, conditioned};
}

std::vector<LossRecord> PretrainLoop::run(std::size_t steps,
                                          const std::function<void(const LossRecord&)>& on_step) {
    std::vector<LossRecord> records;
    records.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        records.push_back(step());
        if (on_step) on_step(records.back());
    }
    return records;
}

void TinyInstance::validate() const {
    check_contract(n_nodes >= 2 && n_nodes <= 3, "TinyInstance: 2 or 3 nodes");
    check_contract(!h_weights.empty() && h_weights.size() <= 4,
                   "TinyInstance: at most 4 H variants");
    check_contract(h_weights.size() == h_variants.size() && h_weights.size() == pair_dists.size(),
                   "TinyInstance: variant arrays must align");
    double w = 0.0;
    for (double x : h_weights) {
        check_contract(x >= 0.0, "TinyInstance: negative weight");
        w += x;
    }
    check_contract(std::fabs(w - 1.0) < 1e-9, "TinyInstance: weights must sum to 1");
    for (const auto& dists : pair_dists) {
        check_contract(dists.size() == pair_count(), "TinyInstance: pair distribution count");
        for (const RelDist& d : dists) {
            double s = 0.0;
            for (double x : d) s += x;
            check_contract(std::fabs(s - 1.0) < 1e-9, "TinyInstance: pair dist must sum to 1");
        }
    }
}

namespace {

// Enumeration helpers over assignments of relations to P ordered pairs.
std::size_t pow4(std::size_t p) { return std::size_t{1} << (2 * p); }

void decode_assignment(std::size_t code, std::size_t p, std::vector<std::size_t>& out) {
    out.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        out[k] = code & 3;
        code >>= 2;
    }
}

AdjTensor assignment_to_adj(const std::vector<std::size_t>& codes, std::size_t n) {
    const auto pairs = ordered_pairs(n);
    AdjTensor adj(n);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        adj.set(pairs[k].first, pairs[k].second, static_cast<Relation>(codes[k]));
    return adj;
}

// Groups variants by byte-identical condition embeddings.
std::vector<std::vector<std::size_t>> group_variants(const TinyInstance& inst,
                                                     const EnumerableModel& model) {
    std::vector<std::vector<double>> sigs(inst.h_weights.size());
    for (std::size_t v = 0; v < sigs.size(); ++v) sigs[v] = model.condition(v);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<bool> taken(sigs.size(), false);
    for (std::size_t v = 0; v < sigs.size(); ++v) {
        if (taken[v]) continue;
        std::vector<std::size_t> g{v};
        taken[v] = true;
        for (std::size_t u = v + 1; u < sigs.size(); ++u) {
            if (taken[u] || sigs[u].size() != sigs[v].size()) continue;
            if (std::memcmp(sigs[u].data(), sigs[v].data(), sigs[v].size() * sizeof(double)) == 0) {
                g.push_back(u);
                taken[u] = true;
            }
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

}  // namespace

EntropyBoundResult entropy_bound_check(const TinyInstance& inst, const EnumerableModel& model,
                                       const NoiseSchedule& schedule, std::size_t t,
                                       const RelDist& m) {
    inst.validate();
    const std::size_t P = inst.pair_count();
    check_contract(P <= 6, "entropy_bound_check: instance too large to enumerate");
    const TransitionMatrix qbar = cumulative_transition(schedule, t, m);
    const std::size_t n_variants = inst.h_weights.size();

    // kappa[v][k][a] = P(At_k = a | variant v); post[v][k][a][r0] posterior.
    std::vector<std::vector<RelDist>> kappa(n_variants, std::vector<RelDist>(P));
    std::vector<std::vector<std::array<RelDist, kRelationCount>>> post(
        n_variants, std::vector<std::array<RelDist, kRelationCount>>(P));
    for (std::size_t v = 0; v < n_variants; ++v)
        for (std::size_t k = 0; k < P; ++k)
            for (std::size_t a = 0; a < kRelationCount; ++a) {
                double s = 0.0;
                for (std::size_t r0 = 0; r0 < kRelationCount; ++r0)
                    s += inst.pair_dists[v][k][r0] * qbar.q[r0][a];
                kappa[v][k][a] = s;
                for (std::size_t r0 = 0; r0 < kRelationCount; ++r0)
                    post[v][k][a][r0] =
                        s > 0.0 ? inst.pair_dists[v][k][r0] * qbar.q[r0][a] / s : 0.0;
            }

    // --- Loss: exact expectation over (variant, At), posterior-weighted CE.
    double loss = 0.0;
    std::vector<std::size_t> codes;
    for (std::size_t v = 0; v < n_variants; ++v) {
        if (inst.h_weights[v] == 0.0) continue;
        for (std::size_t code = 0; code < pow4(P); ++code) {
            decode_assignment(code, P, codes);
            double p_at = inst.h_weights[v];
            for (std::size_t k = 0; k < P; ++k) p_at *= kappa[v][k][codes[k]];
            if (p_at == 0.0) continue;
            const AdjTensor at = assignment_to_adj(codes, inst.n_nodes);
            const std::vector<RelDist> preds = model.predict(v, at, t);
            check_contract(preds.size() == P, "entropy_bound_check: model pair count");
            double ce = 0.0;
            for (std::size_t k = 0; k < P; ++k)
                for (std::size_t r0 = 0; r0 < kRelationCount; ++r0) {
                    const double q = post[v][k][codes[k]][r0];
                    if (q == 0.0) continue;
                    const double p = std::max(preds[k][r0], 1e-300);
                    ce -= q * std::log(p);
                }
            loss += p_at * ce;
        }
    }

    // --- Exact H(A0 | At, cond): group variants by condition embedding.
    double entropy = 0.0;
    for (const auto& group : group_variants(inst, model)) {
        double wg = 0.0;
        for (std::size_t v : group) wg += inst.h_weights[v];
        if (wg == 0.0) continue;
        if (group.size() == 1) {
            // Pairs stay independent given a single variant: the joint
            // conditional entropy is the sum of per-pair posterior entropies.
            const std::size_t v = group[0];
            for (std::size_t k = 0; k < P; ++k)
                for (std::size_t a = 0; a < kRelationCount; ++a) {
                    if (kappa[v][k][a] == 0.0) continue;
                    double h = 0.0;
                    for (std::size_t r0 = 0; r0 < kRelationCount; ++r0) {
                        const double q = post[v][k][a][r0];
                        if (q > 0.0) h -= q * std::log(q);
                    }
                    entropy += wg * kappa[v][k][a] * h;
                }
            continue;
        }
        // Mixture of product distributions: enumerate (At, A0) jointly.
        std::vector<std::size_t> acodes, bcodes;
        for (std::size_t acode = 0; acode < pow4(P); ++acode) {
            decode_assignment(acode, P, acodes);
            double p_a = 0.0;
            for (std::size_t v : group) {
                double p = inst.h_weights[v] / wg;
                for (std::size_t k = 0; k < P; ++k) p *= kappa[v][k][acodes[k]];
                p_a += p;
            }
            if (p_a == 0.0) continue;
            double h_a = 0.0;
            for (std::size_t bcode = 0; bcode < pow4(P); ++bcode) {
                decode_assignment(bcode, P, bcodes);
                double p_ab = 0.0;
                for (std::size_t v : group) {
                    double p = inst.h_weights[v] / wg;
                    for (std::size_t k = 0; k < P; ++k)
                        p *= inst.pair_dists[v][k][bcodes[k]] * qbar.q[bcodes[k]][acodes[k]];
                    p_ab += p;
                }
                if (p_ab > 0.0) h_a -= p_ab * std::log(p_ab / p_a);
            }
            entropy += wg * h_a;
        }
    }
    return EntropyBoundResult{loss, entropy};
}

EnumerableModel exact_posterior_model(const TinyInstance& inst, const NoiseSchedule& schedule,
                                      const RelDist& m) {
    inst.validate();
    EnumerableModel model;
    model.condition = [&inst](std::size_t v) { return inst.h_variants[v].data; };
    model.predict = [&inst, &schedule, m](std::size_t v, const AdjTensor& at, std::size_t t) {
        const TransitionMatrix qbar = cumulative_transition(schedule, t, m);
        const auto pairs = ordered_pairs(inst.n_nodes);
        // Variants sharing identical H must share predictions; mix them.
        std::vector<std::size_t> peers;
        double wsum = 0.0;
        for (std::size_t u = 0; u < inst.h_variants.size(); ++u) {
            if (inst.h_variants[u].same_shape(inst.h_variants[v]) &&
                inst.h_variants[u].data == inst.h_variants[v].data) {
                peers.push_back(u);
                wsum += inst.h_weights[u];
            }
        }
        std::vector<RelDist> preds(pairs.size());
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto a = static_cast<std::size_t>(at.at(pairs[k].first, pairs[k].second));
            RelDist marginal_post{};
            double z = 0.0;
            for (std::size_t u : peers) {
                // Mixture weight of u given the full observed At.
                double w = inst.h_weights[u] / wsum;
                for (std::size_t kk = 0; kk < pairs.size(); ++kk) {
                    const auto akk =
                        static_cast<std::size_t>(at.at(pairs[kk].first, pairs[kk].second));
                    double s = 0.0;
                    for (std::size_t r0 = 0; r0 < kRelationCount; ++r0)
                        s += inst.pair_dists[u][kk][r0] * qbar.q[r0][akk];
                    w *= s;
                }
                double s = 0.0;
                for (std::size_t r0 = 0; r0 < kRelationCount; ++r0)
                    s += inst.pair_dists[u][k][r0] * qbar.q[r0][a];
                for (std::size_t r0 = 0; r0 < kRelationCount; ++r0)
                    marginal_post[r0] += s > 0.0
                                             ? w * inst.pair_dists[u][k][r0] * qbar.q[r0][a] / s
                                             : 0.0;
                z += w;
            }
            for (double& x : marginal_post) x /= z;
            preds[k] = marginal_post;
        }
        return preds;
    };
    return model;
}

}  // namespace dampe
