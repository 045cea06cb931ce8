// Acceptance suite: runs every pipeline-level criterion at its stated
// tolerance and prints one pass/fail line per criterion.
//
// Usage: dampe_acceptance [path-to-dampe-binary]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dampe/checkpoint.hpp"
#include "dampe/config.hpp"
#include "dampe/denoiser.hpp"
#include "dampe/diffusion.hpp"
#include "dampe/hetgraph.hpp"
#include "dampe/moe.hpp"
#include "dampe/optim.hpp"
#include "dampe/otalign.hpp"
#include "dampe/pipeline.hpp"
#include "dampe/predictor.hpp"
#include "dampe/synthdata.hpp"
#include "dampe/trainer.hpp"

#include "../oracles.hpp"

using namespace dampe;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;
int g_failures = 0;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------- 1: OT

void criterion_ot() {
    const auto start = Clock::now();
    Rng rng(101);
    double worst_marginal = 0.0, worst_oracle = 0.0;
    bool ok = true;
    const double epsilons[4] = {0.02, 0.05, 0.1, 0.3};
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(15);
        const std::size_t m = 2 + rng.uniform_index(15);
        CostMatrix c;
        c.values = DenseMatrix(n, m);
        for (double& x : c.values.data) x = std::fabs(rng.normal());
        const double eps = epsilons[trial % 4];
        const TransportPlan plan = sinkhorn_solve(c, eps, 1e-10, 200000);
        worst_marginal = std::max(worst_marginal, plan_marginal_error(plan.values));
        const DenseMatrix oracle = oracles::entropic_ot_oracle(c.values, eps);
        worst_oracle = std::max(worst_oracle, max_abs_diff(plan.values, oracle));
    }
    const double elapsed = seconds_since(start);
    ok = worst_marginal < 1e-6 && worst_oracle < 1e-5 && elapsed < 10.0;
    report(1, "OT correctness on 50 random cost matrices", ok,
           "max marginal L1 " + fmt(worst_marginal) + ", max oracle diff " + fmt(worst_oracle) +
               ", " + fmt(elapsed) + " s");
}

// ------------------------------------------------- 2: planted-map recovery

void criterion_planted_map() {
    double mean_score = 0.0, min_score = 1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.map_kind = CrossModalMap::permutation;
        cfg.d_seq = cfg.d_struc = 16;
        cfg.seq_noise = 0.01;
        cfg.struc_noise = 0.01;
        const SynthDataset ds = gen_dataset(cfg);
        const CostMatrix cost = build_cost(ds.e_struc, ds.e_seq);
        const TransportPlan plan = sinkhorn_solve(cost, 0.001, 1e-6, 1000000);
        const double score = planted_map_check(ds, plan);
        mean_score += score / 5.0;
        min_score = std::min(min_score, score);
    }
    report(2, "planted permutation recovery (d=16, sigma=0.01, 5 seeds)", mean_score >= 0.9,
           "mean score " + fmt(mean_score) + ", min " + fmt(min_score));
}

// ---------------------------------------------- 3: diffusion kernel exactness

void criterion_diffusion_kernels() {
    bool ok = true;
    double worst_ck = 0.0, worst_closed = 0.0, worst_tv = 0.0;
    const RelDist marginals[2] = {{0.25, 0.25, 0.25, 0.25}, {0.02, 0.03, 0.05, 0.9}};
    const NoiseSchedule s64 = cosine_schedule(64);
    for (const RelDist& m : marginals) {
        // Closed form vs iterated product, and Chapman-Kolmogorov, t <= 64.
        TransitionMatrix acc;
        for (std::size_t i = 0; i < kRelationCount; ++i)
            for (std::size_t j = 0; j < kRelationCount; ++j) acc.q[i][j] = i == j ? 1.0 : 0.0;
        for (std::size_t t = 1; t <= 64; ++t) {
            const TransitionMatrix q = transition_matrix(s64, t, m);
            TransitionMatrix next;
            for (std::size_t i = 0; i < kRelationCount; ++i)
                for (std::size_t j = 0; j < kRelationCount; ++j) {
                    double v = 0.0;
                    for (std::size_t k = 0; k < kRelationCount; ++k)
                        v += acc.q[i][k] * q.q[k][j];
                    next.q[i][j] = v;
                }
            acc = next;
            const TransitionMatrix closed = cumulative_transition(s64, t, m);
            for (std::size_t i = 0; i < kRelationCount; ++i)
                for (std::size_t j = 0; j < kRelationCount; ++j)
                    worst_closed =
                        std::max(worst_closed, std::fabs(closed.q[i][j] - acc.q[i][j]));
            if (t >= 2) {
                const TransitionMatrix qbar_prev = cumulative_transition(s64, t - 1, m);
                const TransitionMatrix qbar = cumulative_transition(s64, t, m);
                for (std::size_t r0 = 0; r0 < kRelationCount; ++r0)
                    for (std::size_t rt = 0; rt < kRelationCount; ++rt) {
                        double sum = 0.0;
                        for (std::size_t rp = 0; rp < kRelationCount; ++rp)
                            sum += qbar_prev.q[r0][rp] * q.q[rp][rt];
                        worst_ck = std::max(worst_ck, std::fabs(sum - qbar.q[r0][rt]));
                    }
            }
        }
        // Stationarity for T >= 50.
        for (std::size_t T : {50, 64, 100, 200, 500}) {
            const NoiseSchedule s = cosine_schedule(T);
            const TransitionMatrix qbar = cumulative_transition(s, T, m);
            for (std::size_t i = 0; i < kRelationCount; ++i) {
                double tv = 0.0;
                for (std::size_t j = 0; j < kRelationCount; ++j)
                    tv += std::fabs(qbar.q[i][j] - m[j]);
                worst_tv = std::max(worst_tv, 0.5 * tv);
            }
        }
    }
    ok = worst_ck < 1e-10 && worst_closed < 1e-10 && worst_tv < 0.05;
    report(3, "diffusion kernel exactness", ok,
           "CK " + fmt(worst_ck) + ", closed-vs-product " + fmt(worst_closed) + ", terminal TV " +
               fmt(worst_tv));
}

// ------------------------------------------------ 4: entropy lower bound

TinyInstance random_instance(std::size_t n_nodes, std::size_t variants, Rng& rng) {
    TinyInstance inst;
    inst.n_nodes = n_nodes;
    inst.h_weights.assign(variants, 1.0 / static_cast<double>(variants));
    for (std::size_t v = 0; v < variants; ++v) {
        DenseMatrix h(n_nodes, 4);
        for (double& x : h.data) x = rng.normal();
        inst.h_variants.push_back(h);
        std::vector<RelDist> dists;
        for (std::size_t k = 0; k < inst.pair_count(); ++k) {
            RelDist d{};
            double z = 0.0;
            for (std::size_t r = 0; r < kRelationCount; ++r) {
                d[r] = 0.05 + rng.uniform();
                z += d[r];
            }
            for (double& x : d) x /= z;
            dists.push_back(d);
        }
        inst.pair_dists.push_back(dists);
    }
    return inst;
}

void criterion_entropy_bound() {
    const RelDist uniform{0.25, 0.25, 0.25, 0.25};
    const NoiseSchedule schedule = cosine_schedule(8);
    Rng rng(404);
    bool ok = true;
    double worst_violation = -1e300, worst_equality = 0.0;
    std::size_t instances = 0;

    MoeEncoder moe(4, 4, 2);
    DenoiserConfig dc;
    dc.layers = 1;
    dc.d_model = 8;
    dc.d_edge = 4;
    dc.heads = 2;
    dc.d_cond = 4;
    dc.d_go = 2;
    Denoiser den(dc);

    auto ego_for = [](const TinyInstance& inst, const AdjTensor& at) {
        EgoGraph ego;
        for (std::size_t i = 0; i < inst.n_nodes; ++i) {
            ego.nodes.push_back(static_cast<std::uint32_t>(i));
            ego.kinds.push_back(NodeKind::protein);
            ego.protein_locals.push_back(i);
        }
        ego.adj = at;
        return ego;
    };

    // 14 two-node instances through the real model, half with briefly
    // trained parameters; checks at three timesteps each.
    for (int k = 0; k < 14; ++k) {
        const TinyInstance inst = random_instance(2, 1 + k % 3, rng);
        ParamStore params;
        Rng init(500 + k);
        moe.init_params(params, init);
        den.init_params(params, init);
        DenseMatrix headw(4, 4);
        for (double& x : headw.data) x = 0.4 * init.normal();
        params.value("denoiser.head.w") = headw;
        if (k % 2 == 1) {
            // Briefly train on samples from the instance itself.
            AdamW opt(AdamW::Hyper{3e-3, 0.9, 0.999, 1e-8, 0.0});
            Rng train_rng(900 + k);
            for (int step = 0; step < 30; ++step) {
                const std::size_t v = train_rng.uniform_index(inst.h_weights.size());
                AdjTensor a0(inst.n_nodes);
                const auto pairs = ordered_pairs(inst.n_nodes);
                for (std::size_t p = 0; p < pairs.size(); ++p)
                    a0.set(pairs[p].first, pairs[p].second,
                           static_cast<Relation>(
                               train_rng.categorical(inst.pair_dists[v][p].data(), 4)));
                const std::size_t t = 1 + train_rng.uniform_index(schedule.T);
                const AdjTensor at = forward_sample(a0, schedule, t, uniform, train_rng);
                params.zero_grad();
                Tape tape;
                EgoGraph ego = ego_for(inst, at);
                ego.h_rows = inst.h_variants[v];
                Var cond = moe.encode(tape, params, tape.constant(ego.h_rows));
                Var logits = den.predict_logits(tape, params, ego, at, cond, t);
                Var loss = tape.mean_ce_with_logits(logits, onehot_targets(a0));
                tape.backward(loss);
                opt.step(params);
            }
        }
        EnumerableModel model;
        model.condition = [&](std::size_t v) {
            return moe.encode_rows(params, inst.h_variants[v]).data;
        };
        model.predict = [&](std::size_t v, const AdjTensor& at, std::size_t t) {
            EgoGraph ego = ego_for(inst, at);
            ego.h_rows = inst.h_variants[v];
            const DenseMatrix cond = moe.encode_rows(params, ego.h_rows);
            return den.predict_clean(params, ego, at, cond, t).softmax();
        };
        for (std::size_t t : {1ul, 4ul, 8ul}) {
            const EntropyBoundResult r = entropy_bound_check(inst, model, schedule, t, uniform);
            worst_violation = std::max(worst_violation, r.entropy - r.loss);
        }
        ++instances;
    }

    // 8 oracle instances (2- and 3-node): inequality AND equality.
    for (int k = 0; k < 8; ++k) {
        const TinyInstance inst = random_instance(k < 5 ? 2 : 3, 1 + k % 2, rng);
        const EnumerableModel oracle = exact_posterior_model(inst, schedule, uniform);
        for (std::size_t t : {2ul, 6ul}) {
            const EntropyBoundResult r = entropy_bound_check(inst, oracle, schedule, t, uniform);
            worst_violation = std::max(worst_violation, r.entropy - r.loss);
            worst_equality = std::max(worst_equality, std::fabs(r.loss - r.entropy));
        }
        ++instances;
    }

    ok = worst_violation <= 1e-9 && worst_equality < 1e-9 && instances >= 20;
    report(4, "entropy lower bound on enumerable instances", ok,
           std::to_string(instances) + " instances, worst entropy-loss " + fmt(worst_violation) +
               ", oracle |loss-entropy| " + fmt(worst_equality));
}

// ------------------------------------------------- 5: gradient integrity

void criterion_gradients() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        {
            MoeEncoder moe(4, 3, 3);
            ParamStore params;
            moe.init_params(params, rng);
            DenseMatrix gate(4, 3);
            for (double& x : gate.data) x = 0.5 * rng.normal();
            params.value("moe.gate.w") = gate;
            DenseMatrix h(4, 4);
            for (double& x : h.data) x = rng.normal();
            auto build = [&](Tape& t) {
                Var out = moe.encode(t, params, t.constant(h));
                return t.mean_all(t.mul(out, out));
            };
            worst = std::max(worst, finite_diff_check(params, build, 1e-5));
        }
        {
            DenoiserConfig dc;
            dc.layers = 1;
            dc.d_model = 8;
            dc.d_edge = 4;
            dc.heads = 2;
            dc.d_cond = 4;
            dc.d_go = 3;
            Denoiser den(dc);
            ParamStore params;
            den.init_params(params, rng);
            DenseMatrix headw(4, 4);
            for (double& x : headw.data) x = 0.4 * rng.normal();
            params.value("denoiser.head.w") = headw;
            EgoGraph ego;
            const std::size_t n = 4;
            for (std::size_t i = 0; i < n; ++i) {
                ego.nodes.push_back(static_cast<std::uint32_t>(i));
                const bool prot = i < 3;
                ego.kinds.push_back(prot ? NodeKind::protein : NodeKind::go);
                (prot ? ego.protein_locals : ego.go_locals).push_back(i);
            }
            ego.adj = AdjTensor(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (i != j && rng.uniform() < 0.4)
                        ego.adj.set(i, j, static_cast<Relation>(rng.uniform_index(3)));
            ego.h_rows = DenseMatrix(3, 4);
            for (double& x : ego.h_rows.data) x = rng.normal();
            ego.z_rows = DenseMatrix(1, 3);
            for (double& x : ego.z_rows.data) x = rng.normal();
            const DenseMatrix targets = onehot_targets(ego.adj);
            auto build = [&](Tape& t) {
                Var cond = t.constant(ego.h_rows);
                Var logits = den.predict_logits(t, params, ego, ego.adj, cond, 3);
                return t.mean_ce_with_logits(logits, targets);
            };
            worst = std::max(worst, finite_diff_check(params, build, 1e-5));
        }
        {
            Classifier clf(4, 6, 3);
            ParamStore params;
            clf.init_params(params, rng);
            DenseMatrix h(5, 4), y(5, 3, 0.0);
            for (double& x : h.data) x = rng.normal();
            for (double& x : y.data) x = rng.uniform() < 0.4 ? 1.0 : 0.0;
            auto build = [&](Tape& t) {
                Var probs = t.sigmoid(clf.logits(t, params, t.constant(h)));
                return t.bce_mean(probs, y);
            };
            worst = std::max(worst, finite_diff_check(params, build, 1e-5));
        }
    }
    report(5, "finite-difference gradient integrity (MoE, denoiser, classifier)", worst < 1e-4,
           "max relative error " + fmt(worst) + " over 20 seeds");
}

// --------------------------------------------------- 6: equivariance

void criterion_equivariance() {
    DenoiserConfig dc;
    dc.layers = 2;
    dc.d_model = 16;
    dc.d_edge = 8;
    dc.heads = 2;
    dc.d_cond = 5;
    dc.d_go = 3;
    Denoiser den(dc);
    ParamStore params;
    Rng rng(777);
    den.init_params(params, rng);
    DenseMatrix headw(8, 4);
    for (double& x : headw.data) x = rng.normal();
    params.value("denoiser.head.w") = headw;

    bool exact = true;
    for (int trial = 0; trial < 50 && exact; ++trial) {
        const std::size_t n_prot = 1 + rng.uniform_index(3);
        const std::size_t n_go = 1 + rng.uniform_index(6 - n_prot);
        const std::size_t n = n_prot + n_go;
        EgoGraph ego;
        for (std::size_t i = 0; i < n; ++i) {
            ego.nodes.push_back(static_cast<std::uint32_t>(i));
            const bool prot = i < n_prot;
            ego.kinds.push_back(prot ? NodeKind::protein : NodeKind::go);
            (prot ? ego.protein_locals : ego.go_locals).push_back(i);
        }
        ego.adj = AdjTensor(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && rng.uniform() < 0.35)
                    ego.adj.set(i, j, static_cast<Relation>(rng.uniform_index(3)));
        ego.h_rows = DenseMatrix(n_prot, 5);
        for (double& x : ego.h_rows.data) x = rng.normal();
        ego.z_rows = DenseMatrix(n_go, 3);
        for (double& x : ego.z_rows.data) x = rng.normal();
        const std::size_t t = 1 + rng.uniform_index(16);

        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);

        EgoGraph pego;
        pego.adj = AdjTensor(n);
        std::vector<std::size_t> old_prot_pos(n, 0), old_go_pos(n, 0);
        for (std::size_t k = 0; k < ego.protein_locals.size(); ++k)
            old_prot_pos[ego.protein_locals[k]] = k;
        for (std::size_t k = 0; k < ego.go_locals.size(); ++k)
            old_go_pos[ego.go_locals[k]] = k;
        std::vector<std::size_t> prot_src, go_src;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t src = perm[i];
            pego.nodes.push_back(ego.nodes[src]);
            pego.kinds.push_back(ego.kinds[src]);
            if (ego.kinds[src] == NodeKind::protein) {
                pego.protein_locals.push_back(i);
                prot_src.push_back(old_prot_pos[src]);
            } else {
                pego.go_locals.push_back(i);
                go_src.push_back(old_go_pos[src]);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) pego.adj.set(i, j, ego.adj.at(perm[i], perm[j]));
        pego.h_rows = DenseMatrix(prot_src.size(), 5);
        for (std::size_t k = 0; k < prot_src.size(); ++k)
            std::copy(ego.h_rows.row_ptr(prot_src[k]), ego.h_rows.row_ptr(prot_src[k]) + 5,
                      pego.h_rows.row_ptr(k));
        pego.z_rows = DenseMatrix(go_src.size(), 3);
        for (std::size_t k = 0; k < go_src.size(); ++k)
            std::copy(ego.z_rows.row_ptr(go_src[k]), ego.z_rows.row_ptr(go_src[k]) + 3,
                      pego.z_rows.row_ptr(k));

        const EdgeLogits base = den.predict_clean(params, ego, ego.adj, ego.h_rows, t);
        const EdgeLogits permed = den.predict_clean(params, pego, pego.adj, pego.h_rows, t);
        const auto pairs = ordered_pairs(n);
        std::vector<std::size_t> pair_index(n * n, 0);
        for (std::size_t k = 0; k < pairs.size(); ++k)
            pair_index[pairs[k].first * n + pairs[k].second] = k;
        for (std::size_t k = 0; k < pairs.size() && exact; ++k) {
            const std::size_t src_k =
                pair_index[perm[pairs[k].first] * n + perm[pairs[k].second]];
            for (std::size_t r = 0; r < kRelationCount; ++r)
                if (permed.logits.at(k, r) != base.logits.at(src_k, r)) exact = false;
        }
    }
    report(6, "exact permutation equivariance on 50 random instances", exact,
           exact ? "bitwise equal" : "mismatch found");
}

// -------------------------------------------------- 7: metric oracles

void criterion_metrics() {
    Rng rng(909);
    double worst_fmax = 0.0;
    bool aupr_exact = true, prop_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t np = 2 + rng.uniform_index(19);
        const std::size_t nt = 2 + rng.uniform_index(29);
        DenseMatrix preds(np, nt), labels(np, nt, 0.0);
        for (double& x : preds.data) x = rng.uniform();
        if (trial % 4 == 0)
            for (double& x : preds.data) x = std::round(x * 10.0) / 10.0;  // ties
        for (double& x : labels.data) x = rng.uniform() < 0.3 ? 1.0 : 0.0;
        bool any = false;
        for (double v : labels.data) any = any || v == 1.0;
        if (!any) labels.at(0, 0) = 1.0;
        worst_fmax = std::max(
            worst_fmax, std::fabs(fmax(preds, labels).first - oracles::fmax_naive(preds, labels)));
        if (aupr(preds, labels) != oracles::aupr_naive(preds, labels)) aupr_exact = false;
    }
    for (int trial = 0; trial < 100 && prop_ok; ++trial) {
        const std::size_t n = 3 + rng.uniform_index(10);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::uint32_t t = 1; t < n; ++t) {
            edges.emplace_back(t, static_cast<std::uint32_t>(rng.uniform_index(t)));
            if (rng.uniform() < 0.4)
                edges.emplace_back(t, static_cast<std::uint32_t>(rng.uniform_index(t)));
        }
        const GoDag dag = GoDag::from_edges(n, edges);
        DenseMatrix p(3, n);
        for (double& x : p.data) x = rng.uniform();
        const DenseMatrix once = true_path_propagate(p, dag);
        if (max_abs_diff(once, oracles::propagate_fixpoint(p, dag.children)) != 0.0)
            prop_ok = false;
        if (max_abs_diff(true_path_propagate(once, dag), once) != 0.0) prop_ok = false;
        for (std::size_t tau = 0; tau < n && prop_ok; ++tau)
            for (std::uint32_t child : dag.children[tau])
                for (std::size_t row = 0; row < once.rows; ++row)
                    if (once.at(row, tau) < once.at(row, child)) prop_ok = false;
    }
    const bool ok = worst_fmax < 1e-12 && aupr_exact && prop_ok;
    report(7, "Fmax/AUPR oracles and true-path propagation", ok,
           "fmax max diff " + fmt(worst_fmax) + ", aupr exact " +
               (aupr_exact ? "yes" : "no") + ", propagation " + (prop_ok ? "ok" : "bad"));
}

// --------------------------------------------- 8: directional ablation

RunConfig ablation_config(std::uint64_t seed, bool use_alignment, bool use_cgg) {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("seed", std::to_string(seed));
    cfg.set("train.use_alignment", use_alignment ? "true" : "false");
    cfg.set("train.use_cgg", use_cgg ? "true" : "false");
    return cfg;
}

void criterion_ablation() {
    namespace fs = std::filesystem;
    const auto start = Clock::now();
    const std::string root = "acceptance_ablation";
    fs::remove_all(root);
    double fmax_full = 0.0, fmax_nocgg = 0.0, fmax_concat = 0.0;
    double aupr_full = 0.0, aupr_nocgg = 0.0, aupr_concat = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::string dir = root + "/seed" + std::to_string(seed);
        {
            Pipeline p(ablation_config(seed, true, true), dir + "/full");
            const EvalMetrics m = p.run_all();
            fmax_full += m.fmax_value / 5.0;
            aupr_full += m.aupr_value / 5.0;
        }
        {
            Pipeline p(ablation_config(seed, true, false), dir + "/nocgg");
            const EvalMetrics m = p.run_all();
            fmax_nocgg += m.fmax_value / 5.0;
            aupr_nocgg += m.aupr_value / 5.0;
        }
        {
            Pipeline p(ablation_config(seed, false, false), dir + "/concat");
            const EvalMetrics m = p.run_all();
            fmax_concat += m.fmax_value / 5.0;
            aupr_concat += m.aupr_value / 5.0;
        }
    }
    const double elapsed = seconds_since(start);
    const bool order_fmax = fmax_full >= fmax_nocgg && fmax_nocgg >= fmax_concat;
    const bool order_aupr = aupr_full >= aupr_nocgg && aupr_nocgg >= aupr_concat;
    const bool gap = aupr_full - aupr_concat > 0.01;
    const bool ok = order_fmax && order_aupr && gap && elapsed < 1800.0;
    report(8, "directional ablation (full >= no-CGG >= no-alignment)", ok,
           "fmax " + fmt(fmax_full) + "/" + fmt(fmax_nocgg) + "/" + fmt(fmax_concat) + ", aupr " +
               fmt(aupr_full) + "/" + fmt(aupr_nocgg) + "/" + fmt(aupr_concat) + ", " +
               fmt(elapsed) + " s");
    fs::remove_all(root);
}

// ------------------------------------------------- 9: overfit sanity

void criterion_overfit() {
    const auto start = Clock::now();
    SynthConfig scfg;
    scfg.seed = 3;
    const SynthDataset ds = gen_dataset(scfg);
    const DenseMatrix h = concat_intrinsic(ds.e_seq, ds.e_seq);

    MoeEncoder moe(h.cols, 16, 2);
    DenoiserConfig dc;
    dc.layers = 1;
    dc.d_model = 32;
    dc.d_edge = 16;
    dc.heads = 4;
    dc.d_cond = 16;
    dc.d_go = ds.z.cols;
    Denoiser den(dc);
    ParamStore params;
    Rng rng(11);
    moe.init_params(params, rng);
    den.init_params(params, rng);

    EgoGraph ego;
    for (std::uint32_t id : ds.graph.protein_ids()) {
        ego = sample_ego(ds.graph, id, 2, FanoutSpec{4, 4, 4}, 21, 12);
        if (ego.size() >= 8) break;
    }
    attach_features(ego, ds.graph, h, ds.z);
    const std::size_t T = 50;
    const NoiseSchedule schedule = cosine_schedule(T);
    const RelDist m = relation_marginals(ds.graph);
    AdamW opt(AdamW::Hyper{2e-3, 0.9, 0.999, 1e-8, 0.0});
    Rng train_rng(31);
    for (int step = 0; step < 500; ++step) {
        const std::size_t t = 1 + train_rng.uniform_index(T);
        const AdjTensor at = forward_sample(ego.adj, schedule, t, m, train_rng);
        params.zero_grad();
        Tape tape;
        Var cond = moe.encode(tape, params, tape.constant(ego.h_rows));
        Var logits = den.predict_logits(tape, params, ego, at, cond, t);
        Var loss = tape.mean_ce_with_logits(logits, onehot_targets(ego.adj));
        tape.backward(loss);
        opt.step(params);
    }
    // Evaluate argmax accuracy on fixed corrupted states across timesteps.
    Rng eval_rng(41);
    std::size_t hits = 0, total = 0;
    const auto pairs = ordered_pairs(ego.size());
    for (std::size_t t : {T, T / 2, std::size_t{1}}) {
        const AdjTensor at = forward_sample(ego.adj, schedule, t, m, eval_rng);
        const DenseMatrix cond = moe.encode_rows(params, ego.h_rows);
        const EdgeLogits out = den.predict_clean(params, ego, at, cond, t);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const double* row = out.logits.row_ptr(k);
            std::size_t arg = 0;
            for (std::size_t r = 1; r < kRelationCount; ++r)
                if (row[r] > row[arg]) arg = r;
            hits += arg == static_cast<std::size_t>(
                               ego.adj.at(pairs[k].first, pairs[k].second));
            ++total;
        }
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(total);
    const double elapsed = seconds_since(start);
    report(9, "overfit sanity (500 steps on one ego-graph)", acc >= 0.95 && elapsed < 120.0,
           "argmax accuracy " + fmt(acc) + " on " + std::to_string(total) + " pairs, " +
               fmt(elapsed) + " s");
}

// ------------------------------------------------ 10: CLI determinism

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    namespace fs = std::filesystem;
    if (g_cli.empty()) {
        report(10, "pipeline determinism", false, "no CLI path given");
        return;
    }
    fs::remove_all("acceptance_det_a");
    fs::remove_all("acceptance_det_b");
    const std::string overrides =
        " --seed 7 --set data.n_proteins=150 --set data.n_terms=30"
        " --set data.terms_per_cluster=1 --set data.label_noise=0.0"
        " --set data.dag_second_parent=0.0"
        " --set data.ppi_cross_density=0.002 --set model.d_model=16 --set model.d_edge=8"
        " --set model.heads=2 --set model.layers=1 --set model.d_cond=16"
        " --set model.clf_hidden=32 --set train.steps=6 --set train.batch_size=2"
        " --set train.node_cap=12 --set finetune.steps=30 --set diffusion.T=10 pipeline";
    const int rc1 =
        std::system((g_cli + " --out acceptance_det_a" + overrides + " > /dev/null 2>&1").c_str());
    const int rc2 =
        std::system((g_cli + " --out acceptance_det_b" + overrides + " > /dev/null 2>&1").c_str());
    const std::string a = slurp("acceptance_det_a/metrics.csv");
    const std::string b = slurp("acceptance_det_b/metrics.csv");
    const bool ok = WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0 && !a.empty() && a == b;
    report(10, "pipeline determinism (byte-identical metrics CSV)", ok,
           ok ? "identical" : "runs differ or failed");
    fs::remove_all("acceptance_det_a");
    fs::remove_all("acceptance_det_b");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_cli = argv[1];
    criterion_ot();
    criterion_planted_map();
    criterion_diffusion_kernels();
    criterion_entropy_bound();
    criterion_gradients();
    criterion_equivariance();
    criterion_metrics();
    criterion_overfit();
    criterion_determinism();
    criterion_ablation();
    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
