#include "dampe/otalign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "dampe/error.hpp"

namespace dampe {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
    double mx = xs[0];
    for (double x : xs) mx = std::max(mx, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

CostMatrix build_cost(const DenseMatrix& e_struc, const DenseMatrix& e_seq) {
    check_contract(e_struc.rows == e_seq.rows && e_struc.rows >= 1,
                   "build_cost: embedding matrices must share a positive protein count");
    const std::size_t np = e_struc.rows;
    const std::size_t ds = e_struc.cols, dq = e_seq.cols;
    CostMatrix cost;
    cost.n_proteins = np;
    cost.values = DenseMatrix(ds, dq);
    for (std::size_t i = 0; i < ds; ++i)
        for (std::size_t j = 0; j < dq; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < np; ++p) {
                const double d = e_struc.at(p, i) - e_seq.at(p, j);
                acc += d * d;
            }
            cost.values.at(i, j) = std::sqrt(acc / static_cast<double>(np));
        }
    if (!cost.values.all_finite()) throw NumericFault("build_cost: non-finite cost entry");
    return cost;
}

double plan_marginal_error(const DenseMatrix& plan) {
    const std::size_t n = plan.rows, m = plan.cols;
    const double ra = 1.0 / static_cast<double>(n), cb = 1.0 / static_cast<double>(m);
    double err_r = 0.0, err_c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += plan.at(i, j);
        err_r += std::fabs(s - ra);
    }
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += plan.at(i, j);
        err_c += std::fabs(s - cb);
    }
    return std::max(err_r, err_c);
}

TransportPlan sinkhorn_solve(const CostMatrix& cost, double epsilon, double cost_tol,
                             std::size_t max_iter, double marginal_tol) {
    check_contract(epsilon > 0.0, "sinkhorn_solve: epsilon must be positive");
    check_contract(cost_tol > 0.0, "sinkhorn_solve: cost_tol must be positive");
    check_contract(cost.values.all_finite(), "sinkhorn_solve: cost must be finite");
    const std::size_t n = cost.values.rows, m = cost.values.cols;
    check_contract(n >= 1 && m >= 1, "sinkhorn_solve: empty cost matrix");

    // Normalize the cost by its max entry; epsilon is relative to that scale.
    double cmax = 0.0;
    for (double v : cost.values.data) cmax = std::max(cmax, v);
    DenseMatrix c = cost.values;
    if (cmax > 0.0)
        for (double& v : c.data) v /= cmax;

    const double log_a = -std::log(static_cast<double>(n));
    const double log_b = -std::log(static_cast<double>(m));

    std::vector<double> f(n, 0.0), g(m, 0.0);
    std::vector<double> scratch(std::max(n, m));

    auto assemble_plan = [&](DenseMatrix& t) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                t.at(i, j) = std::exp((f[i] + g[j] - c.at(i, j)) / epsilon);
    };
    auto transport_cost = [&](const DenseMatrix& t) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) s += t.data[i] * c.data[i];
        return s;
    };
    // Dual objective <f,a> + <g,b> - eps * sum(T); non-decreasing under the
    // exact alternating coordinate updates below.
    auto dual_value = [&](const DenseMatrix& t) {
        double s = 0.0;
        for (double v : t.data) s -= epsilon * v;
        for (double v : f) s += v / static_cast<double>(n);
        for (double v : g) s += v / static_cast<double>(m);
        return s;
    };

    TransportPlan plan;
    DenseMatrix t(n, m);
    double prev_cost = std::numeric_limits<double>::infinity();
    double marg_err = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    bool converged = false;
    while (iter < max_iter) {
        // f update: f_i = eps*log a_i - eps*LSE_j((g_j - C_ij)/eps)
        for (std::size_t i = 0; i < n; ++i) {
            scratch.resize(m);
            for (std::size_t j = 0; j < m; ++j) scratch[j] = (g[j] - c.at(i, j)) / epsilon;
            f[i] = epsilon * (log_a - log_sum_exp(scratch));
        }
        for (std::size_t j = 0; j < m; ++j) {
            scratch.resize(n);
            for (std::size_t i = 0; i < n; ++i) scratch[i] = (f[i] - c.at(i, j)) / epsilon;
            g[j] = epsilon * (log_b - log_sum_exp(scratch));
        }
        ++iter;
        assemble_plan(t);
        const double cur_cost = transport_cost(t);
        plan.cost_trace.push_back(cur_cost);
        plan.dual_trace.push_back(dual_value(t));
        marg_err = plan_marginal_error(t);
        if (std::fabs(prev_cost - cur_cost) < cost_tol && marg_err < marginal_tol) {
            converged = true;
            break;
        }
        prev_cost = cur_cost;
    }
    if (!converged)
        throw ConvergenceFailure("sinkhorn_solve: max_iter exhausted, marginal error " +
                                     std::to_string(marg_err),
                                 marg_err);
    if (!t.all_finite()) throw NumericFault("sinkhorn_solve: non-finite plan");

    plan.values = std::move(t);
    plan.epsilon = epsilon;
    plan.iterations = iter;
    plan.marginal_error = marg_err;
    return plan;
}

DenseMatrix barycentric_project(const DenseMatrix& e_struc, const TransportPlan& plan,
                                bool normalize) {
    check_contract(e_struc.cols == plan.values.rows,
                   "barycentric_project: embedding columns must match plan rows");
    DenseMatrix out = matmul(e_struc, plan.values);
    if (normalize) {
        for (std::size_t j = 0; j < plan.values.cols; ++j) {
            double mass = 0.0;
            for (std::size_t i = 0; i < plan.values.rows; ++i) mass += plan.values.at(i, j);
            check_contract(mass > 0.0, "barycentric_project: zero plan column mass");
            for (std::size_t p = 0; p < out.rows; ++p) out.at(p, j) /= mass;
        }
    }
    return out;
}

DenseMatrix concat_intrinsic(const DenseMatrix& e_seq, const DenseMatrix& e_struc_aligned) {
    check_contract(e_seq.rows == e_struc_aligned.rows, "concat_intrinsic: row count mismatch");
    check_contract(e_seq.cols == e_struc_aligned.cols,
                   "concat_intrinsic: aligned block must have d_seq columns");
    DenseMatrix h(e_seq.rows, 2 * e_seq.cols);
    for (std::size_t p = 0; p < e_seq.rows; ++p) {
        std::copy(e_seq.row_ptr(p), e_seq.row_ptr(p) + e_seq.cols, h.row_ptr(p));
        std::copy(e_struc_aligned.row_ptr(p), e_struc_aligned.row_ptr(p) + e_seq.cols,
                  h.row_ptr(p) + e_seq.cols);
    }
    return h;
}

void write_plan(const std::string& path, const TransportPlan& plan) {
    write_matrix_file(path, plan.values);
    std::ofstream meta(path + ".meta");
    if (!meta) throw DataFault("cannot open for writing: " + path + ".meta");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", plan.epsilon);
    meta << "epsilon=" << buf << '\n';
    meta << "iterations=" << plan.iterations << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", plan.marginal_error);
    meta << "marginal_error=" << buf << '\n';
}

TransportPlan read_plan(const std::string& path) {
    TransportPlan plan;
    plan.values = read_matrix_file(path);
    std::ifstream meta(path + ".meta");
    if (!meta) throw DataFault("cannot open: " + path + ".meta");
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "epsilon") plan.epsilon = std::stod(val);
        else if (key == "iterations") plan.iterations = static_cast<std::size_t>(std::stoull(val));
        else if (key == "marginal_error") plan.marginal_error = std::stod(val);
    }
    return plan;
}

}  // namespace dampe
