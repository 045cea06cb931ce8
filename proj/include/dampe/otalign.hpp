#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dampe/matrix.hpp"

namespace dampe {

/// Per-dimension RMSE cost between structure and sequence embedding columns.
struct CostMatrix {
    DenseMatrix values;     // d_struc x d_seq
    std::size_t n_proteins = 0;
};

/// Entropic transport plan over Pi(alpha, beta) with uniform marginals
/// 1/d_struc per row and 1/d_seq per column.
struct TransportPlan {
    DenseMatrix values;         // d_struc x d_seq, nonnegative
    double epsilon = 0.0;
    std::size_t iterations = 0;
    double marginal_error = 0.0;      // final L1 marginal violation
    std::vector<double> cost_trace;   // <T, C/max(C)> after each iteration
    std::vector<double> dual_trace;   // dual objective after each iteration
};

/// cost[i][j] = sqrt( (1/N_p) * sum_p (E_struc[p][i] - E_seq[p][j])^2 )
CostMatrix build_cost(const DenseMatrix& e_struc, const DenseMatrix& e_seq);

/// Log-domain Sinkhorn on C / max(C). Stops once the change in transport
/// cost <T, C/max(C)> per iteration is below cost_tol AND the L1 marginal
/// error is below marginal_tol. Throws ConvergenceFailure on exhaustion.
TransportPlan sinkhorn_solve(const CostMatrix& cost, double epsilon, double cost_tol,
                             std::size_t max_iter, double marginal_tol = 1e-6);

/// Raw barycentric projection E_struc * T (paper-faithful default). With
/// normalize set, each output column is divided by its plan column mass.
DenseMatrix barycentric_project(const DenseMatrix& e_struc, const TransportPlan& plan,
                                bool normalize = false);

/// H = [E_seq ; E_struc_aligned] per row.
DenseMatrix concat_intrinsic(const DenseMatrix& e_seq, const DenseMatrix& e_struc_aligned);

/// L1 violation of the uniform marginal constraints.
double plan_marginal_error(const DenseMatrix& plan);

/// Plan persistence: DenseMatrix file plus "<path>.meta" with key=value lines
/// (epsilon, iterations, marginal_error).
void write_plan(const std::string& path, const TransportPlan& plan);
TransportPlan read_plan(const std::string& path);

}  // namespace dampe
