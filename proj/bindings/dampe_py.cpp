#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dampe/diffusion.hpp"
#include "dampe/hetgraph.hpp"
#include "dampe/matrix.hpp"
#include "dampe/otalign.hpp"
#include "dampe/predictor.hpp"
#include "dampe/synthdata.hpp"

namespace py = pybind11;
using namespace dampe;

namespace {

DenseMatrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    DenseMatrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + m.size(), m.data.data());
    return m;
}

py::array_t<double> to_array(const DenseMatrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

GoDag dag_from_edges(std::size_t n_terms,
                     const std::vector<std::pair<std::uint32_t, std::uint32_t>>& child_parent) {
    return GoDag::from_edges(n_terms, child_parent);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Core operations: entropic OT alignment, discrete diffusion kernels, "
              "hierarchy-aware protein-function metrics, and the synthetic benchmark generator.";

    // --- OT alignment ---
    m.def(
        "build_cost",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& e_struc,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& e_seq) {
            return to_array(build_cost(to_matrix(e_struc), to_matrix(e_seq)).values);
        },
        py::arg("e_struc"), py::arg("e_seq"),
        "Per-dimension RMSE cost matrix between embedding columns.");

    m.def(
        "sinkhorn",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& cost,
           double epsilon, double cost_tol, std::size_t max_iter) {
            CostMatrix c;
            c.values = to_matrix(cost);
            const TransportPlan plan = sinkhorn_solve(c, epsilon, cost_tol, max_iter);
            py::dict meta;
            meta["epsilon"] = plan.epsilon;
            meta["iterations"] = plan.iterations;
            meta["marginal_error"] = plan.marginal_error;
            return py::make_tuple(to_array(plan.values), meta);
        },
        py::arg("cost"), py::arg("epsilon") = 1e-3, py::arg("cost_tol") = 1e-6,
        py::arg("max_iter") = 1000000,
        "Log-domain Sinkhorn on cost/max(cost) with uniform marginals; returns "
        "(plan, metadata).");

    m.def(
        "barycentric_project",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& e_struc,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& plan,
           bool normalize) {
            TransportPlan t;
            t.values = to_matrix(plan);
            return to_array(barycentric_project(to_matrix(e_struc), t, normalize));
        },
        py::arg("e_struc"), py::arg("plan"), py::arg("normalize") = false);

    m.def(
        "concat_intrinsic",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& e_seq,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& aligned) {
            return to_array(concat_intrinsic(to_matrix(e_seq), to_matrix(aligned)));
        },
        py::arg("e_seq"), py::arg("e_struc_aligned"));

    // --- diffusion kernels ---
    m.def(
        "cosine_schedule",
        [](std::size_t T, double shift) {
            const NoiseSchedule s = cosine_schedule(T, shift);
            py::array_t<double> alpha(static_cast<py::ssize_t>(T));
            py::array_t<double> alpha_bar(static_cast<py::ssize_t>(T));
            double* ap = alpha.mutable_data();
            double* bp = alpha_bar.mutable_data();
            for (std::size_t t = 1; t <= T; ++t) {
                ap[t - 1] = s.alpha[t];
                bp[t - 1] = s.alpha_bar[t];
            }
            return py::make_tuple(alpha, alpha_bar);
        },
        py::arg("T"), py::arg("shift") = 0.008,
        "Shifted cosine retention schedule; returns (alpha, alpha_bar) for t = 1..T.");

    auto rel_dist = [](const std::vector<double>& m_in) {
        if (m_in.size() != kRelationCount) throw std::invalid_argument("marginal must have 4 entries");
        RelDist m{};
        std::copy(m_in.begin(), m_in.end(), m.begin());
        return m;
    };

    m.def(
        "transition_matrix",
        [rel_dist](std::size_t T, std::size_t t, const std::vector<double>& marginal, double shift) {
            const NoiseSchedule s = cosine_schedule(T, shift);
            const TransitionMatrix q = transition_matrix(s, t, rel_dist(marginal));
            py::array_t<double> out({kRelationCount, kRelationCount});
            for (std::size_t i = 0; i < kRelationCount; ++i)
                for (std::size_t j = 0; j < kRelationCount; ++j)
                    out.mutable_data()[i * kRelationCount + j] = q.q[i][j];
            return out;
        },
        py::arg("T"), py::arg("t"), py::arg("marginal"), py::arg("shift") = 0.008);

    m.def(
        "cumulative_transition",
        [rel_dist](std::size_t T, std::size_t t, const std::vector<double>& marginal, double shift) {
            const NoiseSchedule s = cosine_schedule(T, shift);
            const TransitionMatrix q = cumulative_transition(s, t, rel_dist(marginal));
            py::array_t<double> out({kRelationCount, kRelationCount});
            for (std::size_t i = 0; i < kRelationCount; ++i)
                for (std::size_t j = 0; j < kRelationCount; ++j)
                    out.mutable_data()[i * kRelationCount + j] = q.q[i][j];
            return out;
        },
        py::arg("T"), py::arg("t"), py::arg("marginal"), py::arg("shift") = 0.008);

    m.def(
        "posterior_distribution",
        [rel_dist](std::size_t r0, std::size_t rt, std::size_t T, std::size_t t,
                   const std::vector<double>& marginal, double shift) {
            const NoiseSchedule s = cosine_schedule(T, shift);
            const RelDist post = posterior_distribution(static_cast<Relation>(r0),
                                                        static_cast<Relation>(rt), s, t,
                                                        rel_dist(marginal));
            return std::vector<double>(post.begin(), post.end());
        },
        py::arg("r0"), py::arg("rt"), py::arg("T"), py::arg("t"), py::arg("marginal"),
        py::arg("shift") = 0.008,
        "Exact reverse posterior over the clean relation of one ordered pair.");

    // --- metrics ---
    m.def(
        "fmax",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& preds,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& labels) {
            const auto [f, tau] = fmax(to_matrix(preds), to_matrix(labels));
            return py::make_tuple(f, tau);
        },
        py::arg("preds"), py::arg("labels"),
        "Protein-centric Fmax over the 0.01 threshold grid; returns (fmax, threshold).");

    m.def(
        "aupr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& preds,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& labels) {
            return aupr(to_matrix(preds), to_matrix(labels));
        },
        py::arg("preds"), py::arg("labels"), "Micro-averaged step-wise area under the PR curve.");

    m.def(
        "true_path_propagate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& preds,
           std::size_t n_terms,
           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& child_parent) {
            return to_array(true_path_propagate(to_matrix(preds),
                                                dag_from_edges(n_terms, child_parent)));
        },
        py::arg("preds"), py::arg("n_terms"), py::arg("child_parent_edges"),
        "Max-propagation of scores from descendants to ancestors over a GO DAG.");

    // --- synthetic benchmark ---
    m.def(
        "generate_dataset",
        [](const std::string& dir, std::size_t n_proteins, std::size_t n_terms, std::size_t d_seq,
           std::size_t d_struc, const std::string& map_kind, double struc_scale, double seq_noise,
           double struc_noise, std::uint64_t seed) {
            SynthConfig cfg;
            cfg.n_proteins = n_proteins;
            cfg.n_terms = n_terms;
            cfg.d_seq = d_seq;
            cfg.d_struc = d_struc;
            cfg.map_kind = cross_modal_map_from_name(map_kind);
            cfg.struc_scale = struc_scale;
            cfg.seq_noise = seq_noise;
            cfg.struc_noise = struc_noise;
            cfg.seed = seed;
            const SynthDataset ds = gen_dataset(cfg);
            write_dataset(dir, ds);
            py::dict info;
            info["n_proteins"] = ds.e_seq.rows;
            info["n_terms"] = ds.z.rows;
            info["edges"] = ds.graph.edges().size();
            info["noedge_fraction"] = ds.noedge_fraction();
            return info;
        },
        py::arg("dir"), py::arg("n_proteins") = 300, py::arg("n_terms") = 40,
        py::arg("d_seq") = 16, py::arg("d_struc") = 16, py::arg("map_kind") = "permutation",
        py::arg("struc_scale") = 3.0, py::arg("seq_noise") = 0.05, py::arg("struc_noise") = 0.05,
        py::arg("seed") = 7,
        "Writes a seeded synthetic dataset (embeddings, graph TSVs, labels, manifest) to dir.");

    m.attr("RELATIONS") = py::make_tuple("ppi", "go", "anno", "noedge");
}
