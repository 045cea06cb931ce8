#include "dampe/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dampe/error.hpp"
#include "dampe/rng.hpp"

#include "json.hpp"

namespace dampe {

const char* cross_modal_map_name(CrossModalMap m) {
    switch (m) {
        case CrossModalMap::rotation: return "rotation";
        case CrossModalMap::permutation: return "permutation";
        case CrossModalMap::random_linear: return "random-linear";
    }
    return "?";
}

CrossModalMap cross_modal_map_from_name(const std::string& name) {
    if (name == "rotation") return CrossModalMap::rotation;
    if (name == "permutation") return CrossModalMap::permutation;
    if (name == "random-linear" || name == "random_linear") return CrossModalMap::random_linear;
    throw ConfigError("unknown cross-modal map: " + name);
}

double SynthDataset::noedge_fraction() const {
    const std::size_t n = graph.node_count();
    const std::size_t total = n * (n - 1);
    return 1.0 - static_cast<double>(graph.edges().size()) / static_cast<double>(total);
}

namespace {

DenseMatrix gaussian(std::size_t r, std::size_t c, double scale, Rng& rng) {
    DenseMatrix m(r, c);
    for (double& x : m.data) x = scale * rng.normal();
    return m;
}

// Random orthogonal square matrix via Gram-Schmidt on a Gaussian draw.
DenseMatrix random_rotation(std::size_t d, Rng& rng) {
    DenseMatrix q = gaussian(d, d, 1.0, rng);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += q.at(i, k) * q.at(j, k);
            for (std::size_t k = 0; k < d; ++k) q.at(i, k) -= dot * q.at(j, k);
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < d; ++k) norm += q.at(i, k) * q.at(i, k);
        norm = std::sqrt(norm);
        check_contract(norm > 1e-9, "random_rotation: degenerate draw");
        for (std::size_t k = 0; k < d; ++k) q.at(i, k) /= norm;
    }
    return q;
}

}  // namespace

SynthDataset gen_dataset(const SynthConfig& cfg) {
    check_contract(cfg.d_seq >= 2 && cfg.d_struc >= 2 && cfg.latent_dim >= 2,
                   "gen_dataset: dims must be >= 2");
    check_contract(cfg.ppi_homophily >= 1.0, "gen_dataset: homophily ratio must be >= 1");
    check_contract(cfg.n_clusters >= 2 && cfg.n_proteins >= cfg.n_clusters,
                   "gen_dataset: need at least 2 clusters");
    check_contract(cfg.train_frac + cfg.valid_frac < 1.0, "gen_dataset: split fractions");
    if (cfg.map_kind != CrossModalMap::random_linear)
        check_contract(cfg.d_struc == cfg.d_seq,
                       "gen_dataset: rotation/permutation maps need d_struc == d_seq");

    Rng rng(cfg.seed);
    SynthDataset ds;
    ds.config = cfg;

    // Latents from a cluster mixture.
    DenseMatrix centers = gaussian(cfg.n_clusters, cfg.latent_dim, cfg.center_spread, rng);
    ds.clusters.resize(cfg.n_proteins);
    ds.latents = DenseMatrix(cfg.n_proteins, cfg.latent_dim);
    for (std::size_t p = 0; p < cfg.n_proteins; ++p) {
        const std::size_t c = p % cfg.n_clusters;
        ds.clusters[p] = c;
        for (std::size_t k = 0; k < cfg.latent_dim; ++k)
            ds.latents.at(p, k) = centers.at(c, k) + cfg.latent_noise * rng.normal();
    }

    // Shared signal base = latents W_s^T, then the two modality views.
    DenseMatrix w_s = gaussian(cfg.latent_dim, cfg.d_seq,
                               1.0 / std::sqrt(static_cast<double>(cfg.latent_dim)), rng);
    DenseMatrix base = matmul(ds.latents, w_s);  // n_proteins x d_seq

    ds.e_seq = DenseMatrix(cfg.n_proteins, cfg.d_seq);
    for (std::size_t i = 0; i < base.size(); ++i)
        ds.e_seq.data[i] = base.data[i] + cfg.seq_noise * rng.normal();

    DenseMatrix struc_base(cfg.n_proteins, cfg.d_struc);
    switch (cfg.map_kind) {
        case CrossModalMap::permutation: {
            std::vector<std::size_t> perm(cfg.d_seq);
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            for (std::size_t i = perm.size(); i-- > 1;)
                std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
            ds.planted_perm = perm;
            for (std::size_t p = 0; p < cfg.n_proteins; ++p)
                for (std::size_t i = 0; i < cfg.d_struc; ++i)
                    struc_base.at(p, i) = base.at(p, perm[i]);
            break;
        }
        case CrossModalMap::rotation: {
            DenseMatrix q = random_rotation(cfg.d_seq, rng);
            struc_base = matmul(base, transpose(q));
            break;
        }
        case CrossModalMap::random_linear: {
            DenseMatrix r = gaussian(cfg.d_seq, cfg.d_struc,
                                     1.0 / std::sqrt(static_cast<double>(cfg.d_seq)), rng);
            struc_base = matmul(base, r);
            break;
        }
    }
    ds.e_struc = DenseMatrix(cfg.n_proteins, cfg.d_struc);
    for (std::size_t i = 0; i < struc_base.size(); ++i)
        ds.e_struc.data[i] = cfg.struc_scale * (struc_base.data[i] + cfg.struc_noise * rng.normal());

    // Random GO DAG: roots first, every later term gets 1-2 earlier parents,
    // levels capped (shallow-wide shape).
    check_contract(cfg.n_terms > cfg.dag_roots, "gen_dataset: need more terms than roots");
    std::vector<std::size_t> level(cfg.n_terms, 0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dag_edges;  // child -> parent
    for (std::size_t tau = cfg.dag_roots; tau < cfg.n_terms; ++tau) {
        std::vector<std::size_t> shallow;
        for (std::size_t j = 0; j < tau; ++j)
            if (level[j] + 1 < cfg.dag_max_depth) shallow.push_back(j);
        check_contract(!shallow.empty(), "gen_dataset: DAG depth cap infeasible");
        const std::size_t primary = shallow[rng.uniform_index(shallow.size())];
        level[tau] = level[primary] + 1;
        dag_edges.emplace_back(static_cast<std::uint32_t>(tau), static_cast<std::uint32_t>(primary));
        if (rng.uniform() < cfg.dag_second_parent_prob) {
            std::vector<std::size_t> shallower;
            for (std::size_t j = 0; j < tau; ++j)
                if (j != primary && level[j] < level[tau]) shallower.push_back(j);
            if (!shallower.empty()) {
                const std::size_t second = shallower[rng.uniform_index(shallower.size())];
                dag_edges.emplace_back(static_cast<std::uint32_t>(tau),
                                       static_cast<std::uint32_t>(second));
            }
        }
    }
    GoDag dag = GoDag::from_edges(cfg.n_terms, dag_edges);

    // Cluster -> core terms (distinct non-roots), labels closed under ancestors.
    std::vector<std::size_t> nonroots;
    for (std::size_t tau = cfg.dag_roots; tau < cfg.n_terms; ++tau) nonroots.push_back(tau);
    check_contract(nonroots.size() >= cfg.n_clusters * cfg.terms_per_cluster,
                   "gen_dataset: not enough terms for distinct cluster cores");
    auto cores = rng.sample_without_replacement(nonroots, cfg.n_clusters * cfg.terms_per_cluster);
    ds.labels.y = DenseMatrix(cfg.n_proteins, cfg.n_terms, 0.0);
    auto add_closed = [&](std::size_t p, std::size_t tau) {
        ds.labels.y.at(p, tau) = 1.0;
        for (std::uint32_t anc : dag.ancestors_of(static_cast<std::uint32_t>(tau)))
            ds.labels.y.at(p, anc) = 1.0;
    };
    for (std::size_t p = 0; p < cfg.n_proteins; ++p) {
        const std::size_t c = ds.clusters[p];
        for (std::size_t k = 0; k < cfg.terms_per_cluster; ++k)
            add_closed(p, cores[c * cfg.terms_per_cluster + k]);
        if (rng.uniform() < cfg.label_noise)
            add_closed(p, nonroots[rng.uniform_index(nonroots.size())]);
    }
    ds.labels.verify_true_path(dag);

    // GO features: DAG depth plus seeded random coordinates.
    ds.z = DenseMatrix(cfg.n_terms, cfg.d_go);
    for (std::size_t tau = 0; tau < cfg.n_terms; ++tau) {
        ds.z.at(tau, 0) =
            static_cast<double>(level[tau]) / static_cast<double>(cfg.dag_max_depth - 1);
        for (std::size_t k = 1; k < cfg.d_go; ++k) ds.z.at(tau, k) = 0.5 * rng.normal();
    }

    // Stratified splits per cluster.
    ds.splits.assign(cfg.n_proteins, Split::train);
    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < cfg.n_proteins; ++p)
            if (ds.clusters[p] == c) members.push_back(p);
        for (std::size_t i = members.size(); i-- > 1;)
            std::swap(members[i], members[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
        const auto n_train = static_cast<std::size_t>(cfg.train_frac * members.size());
        const auto n_valid = static_cast<std::size_t>(cfg.valid_frac * members.size());
        for (std::size_t i = 0; i < members.size(); ++i)
            ds.splits[members[i]] =
                i < n_train ? Split::train : (i < n_train + n_valid ? Split::valid : Split::test);
    }

    // Node ids: proteins [0, N_p), GO terms [N_p, N_p + N_o).
    std::vector<NodeKind> kinds(cfg.n_proteins + cfg.n_terms, NodeKind::protein);
    for (std::size_t tau = 0; tau < cfg.n_terms; ++tau)
        kinds[cfg.n_proteins + tau] = NodeKind::go;

    std::vector<Edge> edges;
    const double same_density = std::min(1.0, cfg.ppi_cross_density * cfg.ppi_homophily);
    for (std::size_t p = 0; p < cfg.n_proteins; ++p)
        for (std::size_t q = p + 1; q < cfg.n_proteins; ++q) {
            const double density =
                ds.clusters[p] == ds.clusters[q] ? same_density : cfg.ppi_cross_density;
            if (rng.uniform() < density)
                edges.push_back(Edge{static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q),
                                     Relation::ppi});
        }
    for (const auto& [child, parent] : dag_edges)
        edges.push_back(Edge{static_cast<std::uint32_t>(cfg.n_proteins + child),
                             static_cast<std::uint32_t>(cfg.n_proteins + parent), Relation::go});
    // Annotation edges from train/valid labels only; test labels stay out of
    // the graph.
    for (std::size_t p = 0; p < cfg.n_proteins; ++p) {
        if (ds.splits[p] == Split::test) continue;
        for (std::size_t tau = 0; tau < cfg.n_terms; ++tau)
            if (ds.labels.y.at(p, tau) == 1.0)
                edges.push_back(Edge{static_cast<std::uint32_t>(p),
                                     static_cast<std::uint32_t>(cfg.n_proteins + tau),
                                     Relation::anno});
    }

    ds.graph = HetGraph::build(std::move(kinds), edges, ds.splits);
    check_contract(ds.noedge_fraction() >= 0.98,
                   "gen_dataset: infeasible sparsity target (noedge fraction below 0.98)");
    return ds;
}

double planted_map_check(const SynthDataset& dataset, const TransportPlan& plan) {
    check_contract(dataset.config.map_kind == CrossModalMap::permutation,
                   "planted_map_check: requires the permutation cross-modal map");
    check_contract(dataset.config.d_struc == dataset.config.d_seq,
                   "planted_map_check: requires square dims");
    const DenseMatrix& t = plan.values;
    check_contract(t.rows == dataset.config.d_struc && t.cols == dataset.config.d_seq,
                   "planted_map_check: plan shape mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < t.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < t.cols; ++j)
            if (t.at(i, j) > t.at(i, best)) best = j;
        if (best == dataset.planted_perm[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(t.rows);
}

void write_dataset(const std::string& dir, const SynthDataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_matrix_file(dir + "/e_seq.mat", ds.e_seq);
    write_matrix_file(dir + "/e_struc.mat", ds.e_struc);
    write_matrix_file(dir + "/z.mat", ds.z);
    write_matrix_file(dir + "/labels.mat", ds.labels.y);

    std::ofstream nodes(dir + "/nodes.tsv");
    for (std::uint32_t id = 0; id < ds.graph.node_count(); ++id)
        nodes << id << '\t' << (ds.graph.kind(id) == NodeKind::protein ? "protein" : "go") << '\n';

    std::ofstream edges(dir + "/edges.tsv");
    for (const Edge& e : ds.graph.edges()) {
        if (e.rel == Relation::ppi && e.src > e.dst) continue;  // one line per ppi edge
        edges << e.src << '\t' << e.dst << '\t' << relation_name(e.rel) << '\n';
    }

    std::ofstream splits(dir + "/splits.tsv");
    for (std::uint32_t id : ds.graph.protein_ids())
        splits << id << '\t' << split_name(ds.splits[ds.graph.protein_ordinal(id)]) << '\n';

    std::ofstream labels(dir + "/labels.tsv");
    for (std::size_t p = 0; p < ds.labels.y.rows; ++p)
        for (std::size_t tau = 0; tau < ds.labels.y.cols; ++tau)
            if (ds.labels.y.at(p, tau) == 1.0)
                labels << p << '\t' << (ds.config.n_proteins + tau) << '\n';

    auto fnv1a = [](const std::vector<double>& data) {
        std::uint64_t h = 1469598103934665603ULL;
        const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
        for (std::size_t i = 0; i < data.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
        return h;
    };
    nlohmann::json manifest;
    manifest["n_proteins"] = ds.config.n_proteins;
    manifest["n_terms"] = ds.config.n_terms;
    manifest["d_seq"] = ds.config.d_seq;
    manifest["d_struc"] = ds.config.d_struc;
    manifest["d_go"] = ds.config.d_go;
    manifest["map_kind"] = cross_modal_map_name(ds.config.map_kind);
    manifest["seed"] = ds.config.seed;
    manifest["edges"] = ds.graph.edges().size();
    manifest["noedge_fraction"] = ds.noedge_fraction();
    manifest["checksum_e_seq"] = fnv1a(ds.e_seq.data);
    manifest["checksum_e_struc"] = fnv1a(ds.e_struc.data);
    manifest["checksum_z"] = fnv1a(ds.z.data);
    manifest["checksum_labels"] = fnv1a(ds.labels.y.data);
    std::ofstream mf(dir + "/manifest.json");
    mf << manifest.dump(2) << '\n';
}

}  // namespace dampe
