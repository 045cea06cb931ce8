#include "dampe/denoiser.hpp"

#include <cmath>

#include "dampe/error.hpp"

namespace dampe {

namespace {

DenseMatrix kaiming(std::size_t rows, std::size_t cols, Rng& rng) {
    DenseMatrix w(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (double& x : w.data) x = scale * rng.normal();
    return w;
}

}  // namespace

std::vector<RelDist> EdgeLogits::softmax() const {
    std::vector<RelDist> out(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* row = logits.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < kRelationCount; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < kRelationCount; ++j) {
            out[i][j] = std::exp(row[j] - mx);
            z += out[i][j];
        }
        for (std::size_t j = 0; j < kRelationCount; ++j) out[i][j] /= z;
    }
    return out;
}

Denoiser::Denoiser(DenoiserConfig cfg, std::string prefix)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    check_contract(cfg_.layers >= 1, "Denoiser: need at least one layer");
    check_contract(cfg_.d_model % cfg_.heads == 0, "Denoiser: d_model must divide by heads");
}

std::string Denoiser::lp(std::size_t layer, const std::string& suffix) const {
    return prefix_ + ".l" + std::to_string(layer) + "." + suffix;
}

DenseMatrix Denoiser::time_embedding(std::size_t t, std::size_t dim) {
    DenseMatrix e(1, dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(k / 2 * 2) / static_cast<double>(dim));
        const double x = static_cast<double>(t) * freq;
        e.data[k] = (k % 2 == 0) ? std::sin(x) : std::cos(x);
    }
    return e;
}

void Denoiser::init_params(ParamStore& store, Rng& rng) const {
    const std::size_t dm = cfg_.d_model, de = cfg_.d_edge;
    store.add(p("proj_cond.w"), kaiming(cfg_.d_cond, dm, rng));
    store.add(p("proj_cond.b"), DenseMatrix::zeros(1, dm));
    store.add(p("proj_go.w"), kaiming(cfg_.d_go, dm, rng));
    store.add(p("proj_go.b"), DenseMatrix::zeros(1, dm));
    store.add(p("null_protein"), kaiming(1, dm, rng));
    store.add(p("null_go"), kaiming(1, dm, rng));
    store.add(p("kind_emb"), kaiming(2, dm, rng));
    store.add(p("edge_emb"), kaiming(kRelationCount, de, rng));
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        store.add(lp(l, "ln1.g"), DenseMatrix(1, dm, 1.0));
        store.add(lp(l, "ln1.b"), DenseMatrix::zeros(1, dm));
        store.add(lp(l, "ln2.g"), DenseMatrix(1, dm, 1.0));
        store.add(lp(l, "ln2.b"), DenseMatrix::zeros(1, dm));
        store.add(lp(l, "lne.g"), DenseMatrix(1, de, 1.0));
        store.add(lp(l, "lne.b"), DenseMatrix::zeros(1, de));
        store.add(lp(l, "attn.wq"), kaiming(dm, dm, rng));
        store.add(lp(l, "attn.wk"), kaiming(dm, dm, rng));
        store.add(lp(l, "attn.wv"), kaiming(dm, dm, rng));
        store.add(lp(l, "attn.wo"), kaiming(dm, dm, rng));
        store.add(lp(l, "attn.bo"), DenseMatrix::zeros(1, dm));
        store.add(lp(l, "attn.edge_bias.w"), kaiming(de, cfg_.heads, rng));
        const std::size_t dff = cfg_.ffn_mult * dm;
        store.add(lp(l, "ffn.w1"), kaiming(dm, dff, rng));
        store.add(lp(l, "ffn.b1"), DenseMatrix::zeros(1, dff));
        store.add(lp(l, "ffn.w2"), kaiming(dff, dm, rng));
        store.add(lp(l, "ffn.b2"), DenseMatrix::zeros(1, dm));
        store.add(lp(l, "edge.w1"), kaiming(2 * dm + de, de, rng));
        store.add(lp(l, "edge.b1"), DenseMatrix::zeros(1, de));
        store.add(lp(l, "edge.w2"), kaiming(de, de, rng));
        store.add(lp(l, "edge.b2"), DenseMatrix::zeros(1, de));
        // Timestep modulation: scale-and-shift for node and edge streams.
        store.add(lp(l, "time.node_scale.w"), DenseMatrix::zeros(dm, dm));
        store.add(lp(l, "time.node_shift.w"), DenseMatrix::zeros(dm, dm));
        store.add(lp(l, "time.edge_scale.w"), DenseMatrix::zeros(dm, de));
        store.add(lp(l, "time.edge_shift.w"), DenseMatrix::zeros(dm, de));
    }
    store.add(p("head.w"), DenseMatrix::zeros(de, kRelationCount));
    store.add(p("head.b"), DenseMatrix::zeros(1, kRelationCount));
}

std::vector<std::string> Denoiser::param_names() const {
    std::vector<std::string> names{p("proj_cond.w"), p("proj_cond.b"), p("proj_go.w"),
                                   p("proj_go.b"),   p("null_protein"), p("null_go"),
                                   p("kind_emb"),    p("edge_emb")};
    for (std::size_t l = 0; l < cfg_.layers; ++l)
        for (const char* s : {"ln1.g", "ln1.b", "ln2.g", "ln2.b", "lne.g", "lne.b", "attn.wq",
                              "attn.wk", "attn.wv", "attn.wo", "attn.bo", "attn.edge_bias.w",
                              "ffn.w1", "ffn.b1", "ffn.w2", "ffn.b2", "edge.w1", "edge.b1",
                              "edge.w2", "edge.b2", "time.node_scale.w", "time.node_shift.w",
                              "time.edge_scale.w", "time.edge_shift.w"})
            names.push_back(lp(l, s));
    names.push_back(p("head.w"));
    names.push_back(p("head.b"));
    return names;
}

Var Denoiser::predict_logits(Tape& tape, ParamStore& store, const EgoGraph& ego,
                             const AdjTensor& at, std::optional<Var> cond_rows,
                             std::size_t t) const {
    const std::size_t n = ego.size();
    check_contract(at.n == n, "predict_logits: adjacency size mismatch");
    const auto pairs = ordered_pairs(n);

    // --- Node tokens ---
    // Content per node: projected condition row (protein) or projected Z row
    // (go), or the learned null embedding when conditions are dropped.
    std::vector<std::size_t> kind_idx(n);
    for (std::size_t i = 0; i < n; ++i)
        kind_idx[i] = ego.kinds[i] == NodeKind::protein ? 0 : 1;

    Var content{-1};
    if (cond_rows.has_value()) {
        check_contract(tape.value(*cond_rows).rows == ego.protein_locals.size(),
                       "predict_logits: condition rows must cover all protein nodes");
        Var prot = tape.add_rowvec(tape.matmul(*cond_rows, tape.param(store, p("proj_cond.w"))),
                                   tape.param(store, p("proj_cond.b")));
        if (ego.go_locals.empty()) {
            // All nodes are proteins; protein order equals node order.
            content = prot;
        } else {
            check_contract(ego.z_rows.rows == ego.go_locals.size(),
                           "predict_logits: Z rows must cover all GO nodes");
            Var z = tape.constant(ego.z_rows, "z_rows");
            Var go = tape.add_rowvec(tape.matmul(z, tape.param(store, p("proj_go.w"))),
                                     tape.param(store, p("proj_go.b")));
            // Interleave to node order: gather each stream with a kind mask
            // so every node row is gather(prot)*is_prot + gather(go)*is_go.
            std::vector<std::size_t> prot_gather(n, 0), go_gather(n, 0);
            DenseMatrix prot_mask(n, 1), go_mask(n, 1);
            for (std::size_t k = 0; k < ego.protein_locals.size(); ++k) {
                prot_gather[ego.protein_locals[k]] = k;
                prot_mask.at(ego.protein_locals[k], 0) = 1.0;
            }
            for (std::size_t k = 0; k < ego.go_locals.size(); ++k) {
                go_gather[ego.go_locals[k]] = k;
                go_mask.at(ego.go_locals[k], 0) = 1.0;
            }
            Var prot_full = tape.mul_colvec(tape.gather_rows(prot, prot_gather),
                                            tape.constant(prot_mask, "prot_mask"));
            Var go_full = tape.mul_colvec(tape.gather_rows(go, go_gather),
                                          tape.constant(go_mask, "go_mask"));
            content = tape.add(prot_full, go_full);
        }
    } else {
        // Conditions dropped: learned null embeddings selected by kind.
        Var nulls = tape.transpose(
            tape.concat_cols(tape.transpose(tape.param(store, p("null_protein"))),
                             tape.transpose(tape.param(store, p("null_go")))));
        content = tape.gather_rows(nulls, kind_idx);
    }
    Var nodes = tape.add(content, tape.gather_rows(tape.param(store, p("kind_emb")), kind_idx));

    // --- Edge tokens: embedded one-hot of A^(t) ---
    std::vector<std::size_t> rel_idx(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k)
        rel_idx[k] = static_cast<std::size_t>(at.at(pairs[k].first, pairs[k].second));
    Var edges = tape.gather_rows(tape.param(store, p("edge_emb")), rel_idx);

    // --- Graph token ---
    Var t_emb = tape.constant(time_embedding(t, cfg_.d_model), "time_embedding");

    const std::size_t dm = cfg_.d_model, de = cfg_.d_edge, nh = cfg_.heads, dh = dm / nh;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        Var node_scale = tape.affine(tape.matmul(t_emb, tape.param(store, lp(l, "time.node_scale.w"))), 1.0, 1.0);
        Var node_shift = tape.matmul(t_emb, tape.param(store, lp(l, "time.node_shift.w")));
        Var edge_scale = tape.affine(tape.matmul(t_emb, tape.param(store, lp(l, "time.edge_scale.w"))), 1.0, 1.0);
        Var edge_shift = tape.matmul(t_emb, tape.param(store, lp(l, "time.edge_shift.w")));

        // Attention with additive edge bias.
        Var xn = tape.layer_norm_rows(nodes, tape.param(store, lp(l, "ln1.g")),
                                      tape.param(store, lp(l, "ln1.b")));
        xn = tape.add_rowvec(tape.mul_rowvec(xn, node_scale), node_shift);
        Var en = tape.layer_norm_rows(edges, tape.param(store, lp(l, "lne.g")),
                                      tape.param(store, lp(l, "lne.b")));
        en = tape.add_rowvec(tape.mul_rowvec(en, edge_scale), edge_shift);

        Var q = tape.matmul(xn, tape.param(store, lp(l, "attn.wq")));
        Var kk = tape.matmul(xn, tape.param(store, lp(l, "attn.wk")));
        Var vv = tape.matmul(xn, tape.param(store, lp(l, "attn.wv")));
        Var bias_all = tape.matmul(en, tape.param(store, lp(l, "attn.edge_bias.w")));  // m x heads

        Var heads_out{-1};
        for (std::size_t h = 0; h < nh; ++h) {
            Var qh = tape.slice_cols(q, h * dh, (h + 1) * dh);
            Var kh = tape.slice_cols(kk, h * dh, (h + 1) * dh);
            Var vh = tape.slice_cols(vv, h * dh, (h + 1) * dh);
            Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt_dh);
            if (!pairs.empty()) {
                Var bias = tape.scatter_pairs(tape.slice_cols(bias_all, h, h + 1), pairs, n);
                scores = tape.add(scores, bias);
            }
            Var probs = tape.softmax_rows(scores);
            Var oh = tape.matmul_setsum(probs, vh);
            heads_out = h == 0 ? oh : tape.concat_cols(heads_out, oh);
        }
        Var attn = tape.add_rowvec(tape.matmul(heads_out, tape.param(store, lp(l, "attn.wo"))),
                                   tape.param(store, lp(l, "attn.bo")));
        nodes = tape.add(nodes, attn);

        // Feed-forward on nodes.
        Var yn = tape.layer_norm_rows(nodes, tape.param(store, lp(l, "ln2.g")),
                                      tape.param(store, lp(l, "ln2.b")));
        Var ff = tape.add_rowvec(tape.matmul(yn, tape.param(store, lp(l, "ffn.w1"))),
                                 tape.param(store, lp(l, "ffn.b1")));
        ff = tape.add_rowvec(tape.matmul(tape.tanh(ff), tape.param(store, lp(l, "ffn.w2"))),
                             tape.param(store, lp(l, "ffn.b2")));
        nodes = tape.add(nodes, ff);

        // Edge update from (node_i, node_j, edge_ij).
        if (!pairs.empty()) {
            std::vector<std::size_t> src(pairs.size()), dst(pairs.size());
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                src[k] = pairs[k].first;
                dst[k] = pairs[k].second;
            }
            Var e_in = tape.concat_cols(
                tape.concat_cols(tape.gather_rows(nodes, src), tape.gather_rows(nodes, dst)), en);
            Var eh = tape.add_rowvec(tape.matmul(e_in, tape.param(store, lp(l, "edge.w1"))),
                                     tape.param(store, lp(l, "edge.b1")));
            eh = tape.add_rowvec(tape.matmul(tape.tanh(eh), tape.param(store, lp(l, "edge.w2"))),
                                 tape.param(store, lp(l, "edge.b2")));
            edges = tape.add(edges, eh);
        }
    }

    return tape.add_rowvec(tape.matmul(edges, tape.param(store, p("head.w"))),
                           tape.param(store, p("head.b")));
}

EdgeLogits Denoiser::predict_clean(ParamStore& store, const EgoGraph& ego, const AdjTensor& at,
                                   std::optional<DenseMatrix> cond_rows, std::size_t t) const {
    Tape tape;
    std::optional<Var> cond;
    if (cond_rows.has_value()) cond = tape.constant(std::move(*cond_rows), "cond_rows");
    Var logits = predict_logits(tape, store, ego, at, cond, t);
    EdgeLogits out;
    out.n_nodes = ego.size();
    out.logits = tape.value(logits);
    return out;
}

EdgeLogits cfg_logits(const EdgeLogits& cond, const EdgeLogits& uncond, double w) {
    check_contract(cond.logits.same_shape(uncond.logits) && cond.n_nodes == uncond.n_nodes,
                   "cfg_logits: shape mismatch");
    check_contract(w >= 0.0, "cfg_logits: w must be >= 0");
    EdgeLogits out;
    out.n_nodes = cond.n_nodes;
    out.logits = DenseMatrix(cond.logits.rows, cond.logits.cols);
    for (std::size_t i = 0; i < out.logits.size(); ++i)
        out.logits.data[i] = (1.0 + w) * cond.logits.data[i] - w * uncond.logits.data[i];
    return out;
}

}  // namespace dampe
