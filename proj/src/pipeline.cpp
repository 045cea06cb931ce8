#include "dampe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dampe/checkpoint.hpp"
#include "dampe/denoiser.hpp"
#include "dampe/error.hpp"
#include "dampe/moe.hpp"
#include "dampe/optim.hpp"
#include "dampe/trainer.hpp"

namespace dampe {

namespace fs = std::filesystem;

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> read_label_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataFault("cannot open label file: " + path);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, '\t') || !std::getline(ss, b, '\t'))
            throw DataFault("label file: expected 'protein_id<TAB>go_id'");
        pairs.emplace_back(static_cast<std::uint32_t>(std::stoul(a)),
                           static_cast<std::uint32_t>(std::stoul(b)));
    }
    return pairs;
}

}  // namespace

DataBundle load_dataset_dir(const std::string& dir) {
    DataBundle data;
    data.e_seq = read_matrix_file(dir + "/e_seq.mat");
    data.e_struc = read_matrix_file(dir + "/e_struc.mat");
    data.z = read_matrix_file(dir + "/z.mat");
    data.graph = load_edges(dir + "/edges.tsv", dir + "/nodes.tsv", dir + "/splits.tsv");
    data.labels.y = DenseMatrix(data.graph.protein_count(), data.graph.go_count(), 0.0);
    for (const auto& [pid, gid] : read_label_pairs(dir + "/labels.tsv"))
        data.labels.y.at(data.graph.protein_ordinal(pid), data.graph.go_ordinal(gid)) = 1.0;
    data.labels.verify_true_path(data.graph.dag());
    return data;
}

Pipeline::Pipeline(RunConfig config, std::string out_dir)
    : cfg_(std::move(config)), out_(std::move(out_dir)) {
    fs::create_directories(out_);
    cfg_.write_resolved(out_ + "/resolved.cfg");
}

SynthConfig Pipeline::synth_config() const {
    SynthConfig s;
    s.n_proteins = cfg_.get_u64("data.n_proteins");
    s.n_terms = cfg_.get_u64("data.n_terms");
    s.d_seq = cfg_.get_u64("data.d_seq");
    s.d_struc = cfg_.get_u64("data.d_struc");
    s.latent_dim = cfg_.get_u64("data.latent_dim");
    s.n_clusters = cfg_.get_u64("data.n_clusters");
    s.seq_noise = cfg_.get_real("data.seq_noise");
    s.struc_noise = cfg_.get_real("data.struc_noise");
    s.struc_scale = cfg_.get_real("data.struc_scale");
    s.map_kind = cross_modal_map_from_name(cfg_.get("data.map_kind"));
    s.ppi_homophily = cfg_.get_real("data.ppi_homophily");
    s.ppi_cross_density = cfg_.get_real("data.ppi_cross_density");
    s.terms_per_cluster = cfg_.get_u64("data.terms_per_cluster");
    s.label_noise = cfg_.get_real("data.label_noise");
    s.dag_roots = cfg_.get_u64("data.dag_roots");
    s.dag_second_parent_prob = cfg_.get_real("data.dag_second_parent");
    s.d_go = cfg_.get_u64("data.d_go");
    s.seed = cfg_.get_u64("seed");
    return s;
}

std::string Pipeline::stage_dir(const std::string& stage, const std::string& hash) const {
    return out_ + "/" + stage + "-" + hash;
}

bool Pipeline::stage_done(const std::string& dir) const { return fs::exists(dir + "/.done"); }

void Pipeline::mark_done(const std::string& dir) const {
    std::ofstream marker(dir + "/.done");
    marker << "ok\n";
}

std::string Pipeline::gen_data() {
    const std::string external = cfg_.get("data.dir");
    if (!external.empty()) {
        if (!fs::exists(external + "/edges.tsv"))
            throw DataFault("data.dir has no edges.tsv: " + external);
        return external;
    }
    const std::string dir = stage_dir("data", cfg_.stage_hash({"data."}));
    if (stage_done(dir)) return dir;
    write_dataset(dir, gen_dataset(synth_config()));
    mark_done(dir);
    return dir;
}

DataBundle Pipeline::load_data() { return load_dataset_dir(gen_data()); }

std::string Pipeline::align() {
    const std::string dir = stage_dir("align", cfg_.stage_hash({"data.", "ot."}));
    if (stage_done(dir)) return dir;
    DataBundle data = load_data();
    fs::create_directories(dir);
    const CostMatrix cost = build_cost(data.e_struc, data.e_seq);
    const TransportPlan plan =
        sinkhorn_solve(cost, cfg_.get_real("ot.epsilon"), cfg_.get_real("ot.cost_tol"),
                       cfg_.get_u64("ot.max_iter"));
    write_plan(dir + "/plan.mat", plan);
    const DenseMatrix aligned =
        barycentric_project(data.e_struc, plan, cfg_.get_flag("ot.normalize_projection"));
    write_matrix_file(dir + "/h.mat", concat_intrinsic(data.e_seq, aligned));
    mark_done(dir);
    return dir;
}

DenseMatrix Pipeline::intrinsic_features(const DataBundle& data,
                                         const std::string& align_dir) const {
    if (cfg_.get_flag("train.use_alignment")) return read_matrix_file(align_dir + "/h.mat");
    // No-alignment arm: raw concatenation of the frozen embeddings.
    DenseMatrix h(data.e_seq.rows, data.e_seq.cols + data.e_struc.cols);
    for (std::size_t p = 0; p < h.rows; ++p) {
        std::copy(data.e_seq.row_ptr(p), data.e_seq.row_ptr(p) + data.e_seq.cols, h.row_ptr(p));
        std::copy(data.e_struc.row_ptr(p), data.e_struc.row_ptr(p) + data.e_struc.cols,
                  h.row_ptr(p) + data.e_seq.cols);
    }
    return h;
}

std::string Pipeline::pretrain() {
    const std::string dir = stage_dir(
        "pretrain", cfg_.stage_hash({"data.", "ot.", "diffusion.", "model.", "train."}));
    if (stage_done(dir)) return dir;
    DataBundle data = load_data();
    const std::string align_dir = cfg_.get_flag("train.use_alignment") ? align() : "";
    const DenseMatrix h = intrinsic_features(data, align_dir);
    fs::create_directories(dir);

    const HetGraph graph = strip_test_annotations(data.graph);  // defensive; generator already strips

    MoeEncoder moe(h.cols, cfg_.get_u64("model.d_cond"), cfg_.get_u64("model.moe_experts"));
    DenoiserConfig dc;
    dc.layers = cfg_.get_u64("model.layers");
    dc.d_model = cfg_.get_u64("model.d_model");
    dc.d_edge = cfg_.get_u64("model.d_edge");
    dc.heads = cfg_.get_u64("model.heads");
    dc.d_cond = cfg_.get_u64("model.d_cond");
    dc.d_go = data.z.cols;
    Denoiser denoiser(dc);

    ParamStore params;
    Rng init_rng(cfg_.get_u64("seed") ^ 0x5d21f0a8u);
    moe.init_params(params, init_rng);
    denoiser.init_params(params, init_rng);

    TrainConfig tc;
    tc.diffusion_steps = cfg_.get_u64("diffusion.T");
    tc.schedule_shift = cfg_.get_real("diffusion.shift");
    tc.batch_size = cfg_.get_u64("train.batch_size");
    tc.steps = cfg_.get_u64("train.steps");
    tc.learning_rate = cfg_.get_real("train.learning_rate");
    tc.weight_decay = cfg_.get_real("train.weight_decay");
    tc.cond_drop_prob = cfg_.get_real("train.cond_drop_prob");
    tc.hops = cfg_.get_u64("train.hops");
    tc.fanout.ppi = cfg_.get_u64("train.fanout_ppi");
    tc.fanout.go = cfg_.get_u64("train.fanout_go");
    tc.fanout.anno = cfg_.get_u64("train.fanout_anno");
    tc.node_cap = cfg_.get_u64("train.node_cap");

    PretrainLoop loop(graph, h, data.z, moe, denoiser, params, tc,
                      cfg_.get_u64("seed") ^ 0x9a1b3c5du);
    std::ofstream log(dir + "/train_log.csv");
    log << "step,t,loss,conditioned\n";
    const std::size_t ckpt_every = cfg_.get_u64("train.checkpoint_every");
    loop.run(tc.steps, [&](const LossRecord& rec) {
        log << rec.step << ',' << rec.t << ',' << fmt_real(rec.loss) << ','
            << (rec.conditioned ? 1 : 0) << '\n';
        if (ckpt_every > 0 && rec.step % ckpt_every == 0 && rec.step < tc.steps) {
            save_params(dir + "/moe.latest", params, moe.param_names());
            save_params(dir + "/denoiser.latest", params, denoiser.param_names());
        }
    });
    save_params(dir + "/moe", params, moe.param_names());
    save_params(dir + "/denoiser", params, denoiser.param_names());
    mark_done(dir);
    return dir;
}

std::string Pipeline::finetune() {
    const std::string dir = stage_dir(
        "finetune",
        cfg_.stage_hash({"data.", "ot.", "diffusion.", "model.", "train.", "finetune."}));
    if (stage_done(dir)) return dir;
    DataBundle data = load_data();
    const std::string align_dir = cfg_.get_flag("train.use_alignment") ? align() : "";
    const DenseMatrix h = intrinsic_features(data, align_dir);
    fs::create_directories(dir);

    MoeEncoder moe(h.cols, cfg_.get_u64("model.d_cond"), cfg_.get_u64("model.moe_experts"));
    ParamStore params;
    Rng init_rng(cfg_.get_u64("seed") ^ 0x5d21f0a8u);
    moe.init_params(params, init_rng);
    if (cfg_.get_flag("train.use_cgg")) load_params(pretrain() + "/moe", params);

    Classifier clf(cfg_.get_u64("model.d_cond"), cfg_.get_u64("model.clf_hidden"),
                   data.graph.go_count());
    Rng clf_rng(cfg_.get_u64("seed") ^ 0x11c3e77bu);
    clf.init_params(params, clf_rng);

    // Train-split protein ordinals and their label rows.
    std::vector<std::size_t> train_rows;
    for (std::uint32_t id : data.graph.protein_ids())
        if (data.graph.split_of(id) == Split::train)
            train_rows.push_back(data.graph.protein_ordinal(id));
    check_data(!train_rows.empty(), "finetune: no train proteins");

    const std::size_t steps = cfg_.get_u64("finetune.steps");
    const std::size_t batch = cfg_.get_u64("finetune.batch_size");
    OneCycle schedule{cfg_.get_real("finetune.peak_lr"),
                      cfg_.get_real("finetune.warmup_fraction"), steps};
    AdamW opt(AdamW::Hyper{schedule.peak, 0.9, 0.999, 1e-8,
                           cfg_.get_real("finetune.weight_decay")});
    Rng rng(cfg_.get_u64("seed") ^ 0x7f4a91d2u);

    std::ofstream log(dir + "/finetune_log.csv");
    log << "step,lr,loss\n";
    for (std::size_t s = 0; s < steps; ++s) {
        DenseMatrix hb(std::min(batch, train_rows.size()), h.cols);
        DenseMatrix yb(hb.rows, data.labels.y.cols);
        for (std::size_t b = 0; b < hb.rows; ++b) {
            const std::size_t row = train_rows[rng.uniform_index(train_rows.size())];
            std::copy(h.row_ptr(row), h.row_ptr(row) + h.cols, hb.row_ptr(b));
            std::copy(data.labels.y.row_ptr(row), data.labels.y.row_ptr(row) + yb.cols,
                      yb.row_ptr(b));
        }
        const double lr = schedule.rate(s);
        const double loss = finetune_step(moe, clf, params, opt, lr, hb, yb);
        log << (s + 1) << ',' << fmt_real(lr) << ',' << fmt_real(loss) << '\n';
    }
    save_params(dir + "/moe", params, moe.param_names());
    save_params(dir + "/clf", params, clf.param_names());
    mark_done(dir);
    return dir;
}

EvalMetrics Pipeline::evaluate() {
    const std::string dir = stage_dir(
        "evaluate", cfg_.stage_hash({"data.", "ot.", "diffusion.", "model.", "train.",
                                     "finetune.", "eval."}));
    EvalMetrics out;
    out.metrics_path = dir + "/metrics.csv";
    if (!stage_done(dir)) {
        DataBundle data = load_data();
        const std::string align_dir = cfg_.get_flag("train.use_alignment") ? align() : "";
        const DenseMatrix h = intrinsic_features(data, align_dir);
        const std::string ft = finetune();
        fs::create_directories(dir);

        MoeEncoder moe(h.cols, cfg_.get_u64("model.d_cond"), cfg_.get_u64("model.moe_experts"));
        Classifier clf(cfg_.get_u64("model.d_cond"), cfg_.get_u64("model.clf_hidden"),
                       data.graph.go_count());
        ParamStore params;
        load_params(ft + "/moe", params);
        load_params(ft + "/clf", params);

        const DenseMatrix h_tilde = moe.encode_rows(params, h);
        DenseMatrix probs = clf.predict_probs(params, h_tilde);
        probs = true_path_propagate(probs, data.graph.dag());

        std::vector<std::size_t> test_rows;
        std::vector<std::uint32_t> test_ids;
        for (std::uint32_t id : data.graph.protein_ids())
            if (data.graph.split_of(id) == Split::test) {
                test_rows.push_back(data.graph.protein_ordinal(id));
                test_ids.push_back(id);
            }
        check_data(!test_rows.empty(), "evaluate: no test proteins");
        DenseMatrix test_probs(test_rows.size(), probs.cols);
        DenseMatrix test_labels(test_rows.size(), probs.cols);
        for (std::size_t r = 0; r < test_rows.size(); ++r) {
            std::copy(probs.row_ptr(test_rows[r]), probs.row_ptr(test_rows[r]) + probs.cols,
                      test_probs.row_ptr(r));
            std::copy(data.labels.y.row_ptr(test_rows[r]),
                      data.labels.y.row_ptr(test_rows[r]) + probs.cols, test_labels.row_ptr(r));
        }

        std::ofstream preds_out(dir + "/predictions.tsv");
        const auto& go_ids = data.graph.go_ids();
        for (std::size_t r = 0; r < test_rows.size(); ++r)
            for (std::size_t tau = 0; tau < test_probs.cols; ++tau)
                preds_out << test_ids[r] << '\t' << go_ids[tau] << '\t'
                          << fmt_real(test_probs.at(r, tau)) << '\n';

        const auto [f, thr] = fmax(test_probs, test_labels);
        const double pr_area = aupr(test_probs, test_labels);
        std::ofstream metrics(dir + "/metrics.csv");
        metrics << "metric,value,seed\n";
        metrics << "fmax," << fmt_real(f) << ',' << cfg_.get("seed") << '\n';
        metrics << "fmax_threshold," << fmt_real(thr) << ',' << cfg_.get("seed") << '\n';
        metrics << "aupr," << fmt_real(pr_area) << ',' << cfg_.get("seed") << '\n';
        mark_done(dir);
    }
    // Read back so cached runs return identical values.
    std::ifstream metrics(out.metrics_path);
    if (!metrics) throw DataFault("missing metrics file: " + out.metrics_path);
    std::string line;
    std::getline(metrics, line);  // header
    while (std::getline(metrics, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const std::string key = line.substr(0, c1);
        const double value = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        if (key == "fmax") out.fmax_value = value;
        else if (key == "fmax_threshold") out.fmax_threshold = value;
        else if (key == "aupr") out.aupr_value = value;
    }
    fs::copy_file(out.metrics_path, out_ + "/metrics.csv", fs::copy_options::overwrite_existing);
    return out;
}

EvalMetrics Pipeline::run_all() {
    gen_data();
    if (cfg_.get_flag("train.use_alignment")) align();
    if (cfg_.get_flag("train.use_cgg")) pretrain();
    finetune();
    return evaluate();
}

std::string Pipeline::bench(std::size_t repeats) {
    if (repeats < 10) throw ConfigError("bench: repeats must be >= 10");
    DataBundle data = load_data();
    const std::string align_dir = cfg_.get_flag("train.use_alignment") ? align() : "";
    const DenseMatrix h = intrinsic_features(data, align_dir);
    const std::string ft = finetune();

    MoeEncoder moe(h.cols, cfg_.get_u64("model.d_cond"), cfg_.get_u64("model.moe_experts"));
    ParamStore params;
    load_params(ft + "/moe", params);

    const std::size_t batch = std::min<std::size_t>(cfg_.get_u64("bench.batch_size"), h.rows);
    DenseMatrix hb(batch, h.cols);
    for (std::size_t b = 0; b < batch; ++b)
        std::copy(h.row_ptr(b), h.row_ptr(b) + h.cols, hb.row_ptr(b));

    moe.encode_rows(params, hb);  // warm-up
    std::vector<double> seconds(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        volatile double sink = moe.encode_rows(params, hb).data[0];
        (void)sink;
        seconds[r] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    double mean = 0.0;
    for (double s : seconds) mean += s;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double s : seconds) var += (s - mean) * (s - mean);
    const double sigma = std::sqrt(var / static_cast<double>(repeats));
    std::vector<double> kept;
    for (double s : seconds)
        if (std::fabs(s - mean) <= 3.0 * sigma) kept.push_back(s);
    double kmean = 0.0;
    for (double s : kept) kmean += s;
    kmean /= static_cast<double>(kept.size());
    double kvar = 0.0;
    for (double s : kept) kvar += (s - kmean) * (s - kmean);
    const double kstd = std::sqrt(kvar / static_cast<double>(kept.size()));

    const std::string path = out_ + "/bench.csv";
    std::ofstream report(path);
    report << "metric,value\n";
    report << "repeats," << repeats << '\n';
    report << "retained," << kept.size() << '\n';
    report << "batch_size," << batch << '\n';
    report << "mean_ms," << fmt_real(kmean * 1e3) << '\n';
    report << "std_ms," << fmt_real(kstd * 1e3) << '\n';
    report << "throughput_per_s," << fmt_real(static_cast<double>(batch) / kmean) << '\n';
    return path;
}

}  // namespace dampe
