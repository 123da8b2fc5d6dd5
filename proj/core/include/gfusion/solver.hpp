#pragma once

#include <string>
#include <vector>

#include "gfusion/factors.hpp"
#include "gfusion/graph.hpp"
#include "gfusion/manifold.hpp"

namespace gfusion {

enum class JacobianMode { kAnalytic, kNumeric };

struct SolverOptions {
  int max_iterations = 50;
  double cost_tolerance = 1e-8;      // relative cost decrease
  double gradient_tolerance = 1e-8;  // infinity norm
  double initial_damping = 1e-4;
  double damping_increase = 10.0;
  double damping_decrease = 0.5;
  JacobianMode jacobian_mode = JacobianMode::kAnalytic;

  void validate() const;
};

enum class TerminationReason {
  kGradientTolerance,
  kCostTolerance,
  kMaxIterations,
  kNoProgress,  // damping exhausted without a cost decrease
};

const char* to_string(TerminationReason reason);

struct SolverReport {
  int iterations = 0;
  int rejected_steps = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double gradient_norm = 0.0;
  TerminationReason reason = TerminationReason::kGradientTolerance;
};

struct SolverResult {
  std::vector<Pose> states;  // same order as the snapshot
  SolverReport report;
};

/// Normal equations of a chain graph: block-tridiagonal Hessian
/// approximation J^T J (whitened, robustified) over the free nodes in node
/// order, gradient J^T r and the cost at the linearization point.
struct LinearSystem {
  std::vector<Matrix6d> diagonal;
  std::vector<Matrix6d> upper;  // upper[k] couples free nodes k and k+1
  std::vector<Vector6d> gradient;
  double cost = 0.0;

  std::size_t size() const { return diagonal.size(); }
  void resize(std::size_t n);
  Eigen::MatrixXd dense_hessian() const;
  Eigen::VectorXd dense_gradient() const;
};

/// Whitened (and Huber-reweighted) residual and Jacobian of one factor.
struct WhitenedLinearization {
  ResidualVector residual;
  FactorJacobian jacobian;
  double loss = 0.0;  // robust cost contribution
};

/// Central differences of the raw residual through pose_boxplus.
FactorJacobian numeric_jacobian(const Factor& factor, std::span<const Pose> states,
                                double step = 1e-6);

/// Raw linearization, then whitening by the covariance square root and IRLS
/// rescaling when the factor carries a Huber loss.
WhitenedLinearization factor_jacobian(const Factor& factor, std::span<const Pose> states,
                                      JacobianMode mode = JacobianMode::kAnalytic);

/// Robust cost sum over all factors.
double evaluate_cost(const GraphSnapshot& problem, const std::vector<Pose>& states);

/// Assembles the normal equations. Throws GaugeError when a free node has a
/// direction no factor constrains, std::logic_error when a factor couples
/// free nodes that are not adjacent.
LinearSystem build_linear_system(const GraphSnapshot& problem,
                                 const std::vector<Pose>& states,
                                 JacobianMode mode = JacobianMode::kAnalytic);

/// Solves (H + damping * diag(H)) delta = -g by block LDL^T elimination in
/// O(n). Throws NumericError when a pivot block is not positive definite.
std::vector<Tangent6> solve_normal_equations(const LinearSystem& system, double damping);

/// Levenberg-Marquardt over all free nodes of the snapshot. Throws GaugeError
/// when the problem is not anchored (no fixed node or global factor reaches
/// some free node). Directions of an anchored node that no factor constrains
/// keep their value.
SolverResult optimize(const GraphSnapshot& problem, const SolverOptions& options = {});

}  // namespace gfusion
