#include "gfusion/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "gfusion/errors.hpp"

namespace gfusion {
namespace {

constexpr double kMaxDamping = 1e16;
constexpr const char* kComponentNames[6] = {"px", "py", "pz", "rx", "ry", "rz"};

// Gathers the states a factor binds, in binding order.
struct BoundStates {
  std::array<Pose, 2> poses;
  std::array<std::ptrdiff_t, 2> index{-1, -1};
  std::size_t count = 0;
  std::span<const Pose> span() const { return {poses.data(), count}; }
};

BoundStates bound_states(const GraphSnapshot& problem, const std::vector<Pose>& states,
                         const Factor& f) {
  BoundStates b;
  const NodeId first = problem.ids.front();
  for (NodeId id : f.nodes()) {
    const auto i = static_cast<std::ptrdiff_t>(id - first);
    if (i < 0 || i >= static_cast<std::ptrdiff_t>(problem.ids.size()) ||
        problem.ids[static_cast<std::size_t>(i)] != id) {
      throw std::logic_error("factor references node " + std::to_string(id) +
                             " outside the snapshot");
    }
    b.poses[b.count] = states[static_cast<std::size_t>(i)];
    b.index[b.count] = i;
    ++b.count;
  }
  return b;
}

void check_snapshot(const GraphSnapshot& problem) {
  if (problem.ids.size() != problem.states.size() ||
      problem.ids.size() != problem.fixed.size()) {
    throw std::invalid_argument("inconsistent graph snapshot");
  }
  for (std::size_t i = 1; i < problem.ids.size(); ++i) {
    if (problem.ids[i] != problem.ids[i - 1] + 1) {
      throw std::invalid_argument("snapshot node ids must be contiguous");
    }
  }
}

// Every free node must be connected, through factors between free nodes, to
// a fixed node or to a node carrying a unary (global) factor.
void check_anchored(const GraphSnapshot& problem) {
  const std::size_t n = problem.ids.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<bool> anchored(n, false);
  for (std::size_t i = 0; i < n; ++i) anchored[i] = problem.fixed[i];
  const NodeId first = problem.ids.front();
  for (const auto& f : problem.factors) {
    const auto ids = f->nodes();
    if (ids.size() == 1) {
      anchored[static_cast<std::size_t>(ids[0] - first)] = true;
    } else {
      const auto a = static_cast<std::size_t>(ids[0] - first);
      const auto b = static_cast<std::size_t>(ids[1] - first);
      if (problem.fixed[a] || problem.fixed[b]) {
        anchored[a] = anchored[b] = true;
      } else {
        parent[find(a)] = find(b);
      }
    }
  }
  std::vector<bool> root_anchored(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (anchored[i]) root_anchored[find(i)] = true;
  }
  std::vector<NodeId> floating;
  for (std::size_t i = 0; i < n; ++i) {
    if (!problem.fixed[i] && !root_anchored[find(i)]) floating.push_back(problem.ids[i]);
  }
  if (!floating.empty()) {
    std::ostringstream msg;
    msg << "gauge freedom: " << floating.size()
        << " free node(s) not reachable from a fixed node or global factor; "
           "unconstrained directions px py pz rx ry rz of nodes "
        << floating.front() << ".." << floating.back();
    throw GaugeError(msg.str());
  }
}

std::vector<Pose> retract(const GraphSnapshot& problem, const std::vector<Pose>& states,
                          const std::vector<Tangent6>& delta) {
  std::vector<Pose> out = states;
  std::size_t k = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (problem.fixed[i]) continue;
    out[i] = pose_boxplus(states[i], delta[k++]);
  }
  return out;
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (!(cost_tolerance > 0.0) || !(gradient_tolerance > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
  if (!(initial_damping > 0.0) || !(damping_increase > 1.0) ||
      !(damping_decrease > 0.0 && damping_decrease < 1.0)) {
    throw ConfigError("invalid damping schedule");
  }
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kGradientTolerance: return "gradient_tolerance";
    case TerminationReason::kCostTolerance: return "cost_tolerance";
    case TerminationReason::kMaxIterations: return "max_iterations";
    case TerminationReason::kNoProgress: return "no_progress";
  }
  return "unknown";
}

void LinearSystem::resize(std::size_t n) {
  diagonal.assign(n, Matrix6d::Zero());
  upper.assign(n > 0 ? n - 1 : 0, Matrix6d::Zero());
  gradient.assign(n, Vector6d::Zero());
  cost = 0.0;
}

Eigen::MatrixXd LinearSystem::dense_hessian() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(6 * n, 6 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    h.block<6, 6>(6 * k, 6 * k) = diagonal[static_cast<std::size_t>(k)];
    if (k + 1 < n) {
      h.block<6, 6>(6 * k, 6 * (k + 1)) = upper[static_cast<std::size_t>(k)];
      h.block<6, 6>(6 * (k + 1), 6 * k) = upper[static_cast<std::size_t>(k)].transpose();
    }
  }
  return h;
}

Eigen::VectorXd LinearSystem::dense_gradient() const {
  Eigen::VectorXd g(6 * static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) g.segment<6>(6 * static_cast<Eigen::Index>(k)) = gradient[k];
  return g;
}

FactorJacobian numeric_jacobian(const Factor& factor, std::span<const Pose> states,
                                double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const int dim = factor.dimension();
  const auto count = static_cast<int>(states.size());
  FactorJacobian jac(dim, 6 * count);
  std::array<Pose, 2> perturbed{};
  for (int k = 0; k < count; ++k) {
    for (int c = 0; c < 6; ++c) {
      Vector6d d = Vector6d::Zero();
      d[c] = step;
      std::copy(states.begin(), states.end(), perturbed.begin());
      perturbed[static_cast<std::size_t>(k)] =
          pose_boxplus(states[static_cast<std::size_t>(k)], Tangent6::from_vector(d));
      const ResidualVector plus = factor.residual({perturbed.data(), states.size()});
      perturbed[static_cast<std::size_t>(k)] =
          pose_boxplus(states[static_cast<std::size_t>(k)], Tangent6::from_vector(-d));
      const ResidualVector minus = factor.residual({perturbed.data(), states.size()});
      jac.col(6 * k + c) = (plus - minus) / (2.0 * step);
    }
  }
  return jac;
}

WhitenedLinearization factor_jacobian(const Factor& factor, std::span<const Pose> states,
                                      JacobianMode mode) {
  Linearization raw;
  if (mode == JacobianMode::kAnalytic) {
    raw = factor.linearize(states);
  } else {
    raw.residual = factor.residual(states);
    raw.jacobian = numeric_jacobian(factor, states);
  }
  WhitenedLinearization out{factor.whiten(raw.residual), factor.whiten(raw.jacobian), 0.0};
  const double s = out.residual.squaredNorm();
  if (const auto delta = factor.huber_delta()) {
    const HuberValue h = huber(s, *delta);
    out.loss = h.loss;
    const double w = std::sqrt(h.derivative);
    out.residual *= w;
    out.jacobian *= w;
  } else {
    out.loss = s;
  }
  return out;
}

double evaluate_cost(const GraphSnapshot& problem, const std::vector<Pose>& states) {
  double cost = 0.0;
  for (const auto& f : problem.factors) {
    const BoundStates b = bound_states(problem, states, *f);
    const double s = f->whiten(f->residual(b.span())).squaredNorm();
    cost += f->huber_delta() ? huber(s, *f->huber_delta()).loss : s;
  }
  return cost;
}

namespace {

// Directions no factor touches keep a unit diagonal when pinned, so their
// step is exactly zero; otherwise they raise GaugeError.
LinearSystem assemble(const GraphSnapshot& problem, const std::vector<Pose>& states,
                      JacobianMode mode, bool pin_unconstrained) {
  std::vector<std::ptrdiff_t> free_index(problem.ids.size(), -1);
  std::ptrdiff_t free_count = 0;
  for (std::size_t i = 0; i < problem.ids.size(); ++i) {
    if (!problem.fixed[i]) free_index[i] = free_count++;
  }
  LinearSystem sys;
  sys.resize(static_cast<std::size_t>(free_count));

  for (const auto& f : problem.factors) {
    const BoundStates b = bound_states(problem, states, *f);
    const WhitenedLinearization lin = factor_jacobian(*f, b.span(), mode);
    sys.cost += lin.loss;

    std::array<std::ptrdiff_t, 2> fi{-1, -1};
    for (std::size_t k = 0; k < b.count; ++k) {
      fi[k] = free_index[static_cast<std::size_t>(b.index[k])];
      if (fi[k] < 0) continue;
      const auto jk = lin.jacobian.middleCols(6 * static_cast<Eigen::Index>(k), 6);
      const auto u = static_cast<std::size_t>(fi[k]);
      sys.diagonal[u].noalias() += jk.transpose() * jk;
      sys.gradient[u].noalias() += jk.transpose() * lin.residual;
    }
    if (b.count == 2 && fi[0] >= 0 && fi[1] >= 0) {
      std::size_t lo = 0, hi = 1;
      if (fi[0] > fi[1]) std::swap(lo, hi);
      if (fi[hi] - fi[lo] != 1) {
        throw std::logic_error("factor couples non-adjacent free nodes; chain solver only");
      }
      sys.upper[static_cast<std::size_t>(fi[lo])].noalias() +=
          lin.jacobian.middleCols(6 * static_cast<Eigen::Index>(lo), 6).transpose() *
          lin.jacobian.middleCols(6 * static_cast<Eigen::Index>(hi), 6);
    }
  }

  std::ostringstream unconstrained;
  for (std::size_t i = 0; i < problem.ids.size(); ++i) {
    if (free_index[i] < 0) continue;
    Matrix6d& d = sys.diagonal[static_cast<std::size_t>(free_index[i])];
    for (int c = 0; c < 6; ++c) {
      if (d(c, c) > 0.0) continue;
      if (pin_unconstrained) {
        d(c, c) = 1.0;
      } else {
        unconstrained << " node" << problem.ids[i] << "." << kComponentNames[c];
      }
    }
  }
  if (!unconstrained.str().empty()) {
    throw GaugeError("rank-deficient system; unconstrained directions:" + unconstrained.str());
  }
  return sys;
}

}  // namespace

LinearSystem build_linear_system(const GraphSnapshot& problem,
                                 const std::vector<Pose>& states, JacobianMode mode) {
  return assemble(problem, states, mode, false);
}

std::vector<Tangent6> solve_normal_equations(const LinearSystem& system, double damping) {
  const std::size_t n = system.size();
  std::vector<Eigen::LLT<Matrix6d>> pivots(n);
  std::vector<Matrix6d> coupling(n);  // S_k^-1 U_k
  std::vector<Vector6d> y(n);

  for (std::size_t k = 0; k < n; ++k) {
    Matrix6d s = system.diagonal[k];
    s.diagonal() += damping * system.diagonal[k].diagonal();
    y[k] = -system.gradient[k];
    if (k > 0) {
      s.noalias() -= system.upper[k - 1].transpose() * coupling[k - 1];
      y[k].noalias() -= system.upper[k - 1].transpose() * pivots[k - 1].solve(y[k - 1]);
    }
    pivots[k].compute(s);
    if (pivots[k].info() != Eigen::Success) {
      throw NumericError("normal equations not positive definite at free node " +
                         std::to_string(k));
    }
    if (k + 1 < n) coupling[k] = pivots[k].solve(system.upper[k]);
  }

  std::vector<Tangent6> delta(n);
  Vector6d next = Vector6d::Zero();
  for (std::size_t k = n; k-- > 0;) {
    Vector6d x = pivots[k].solve(y[k]);
    if (k + 1 < n) x.noalias() -= coupling[k] * next;
    if (!x.allFinite()) throw NumericError("non-finite solver step");
    delta[k] = Tangent6::from_vector(x);
    next = x;
  }
  return delta;
}

SolverResult optimize(const GraphSnapshot& problem, const SolverOptions& options) {
  options.validate();
  check_snapshot(problem);
  if (problem.ids.empty() ||
      std::none_of(problem.fixed.begin(), problem.fixed.end(), [](bool f) { return !f; })) {
    throw GaugeError("nothing to optimize: no free nodes");
  }
  check_anchored(problem);

  SolverResult result{problem.states, {}};
  auto& report = result.report;
  auto& states = result.states;

  LinearSystem sys = assemble(problem, states, options.jacobian_mode, true);
  report.initial_cost = sys.cost;
  double cost = sys.cost;
  double lambda = options.initial_damping;
  report.reason = TerminationReason::kMaxIterations;

  while (true) {
    double gnorm = 0.0;
    for (const auto& g : sys.gradient) gnorm = std::max(gnorm, g.cwiseAbs().maxCoeff());
    report.gradient_norm = gnorm;
    if (gnorm < options.gradient_tolerance) {
      report.reason = TerminationReason::kGradientTolerance;
      break;
    }
    if (report.iterations >= options.max_iterations) {
      report.reason = TerminationReason::kMaxIterations;
      break;
    }
    ++report.iterations;

    bool accepted = false;
    double new_cost = cost;
    std::vector<Pose> candidate;
    while (lambda <= kMaxDamping) {
      try {
        candidate = retract(problem, states, solve_normal_equations(sys, lambda));
        new_cost = evaluate_cost(problem, candidate);
      } catch (const NumericError&) {
        new_cost = std::numeric_limits<double>::infinity();
      }
      if (new_cost < cost) {
        accepted = true;
        lambda = std::max(lambda * options.damping_decrease, 1e-12);
        break;
      }
      ++report.rejected_steps;
      lambda *= options.damping_increase;
    }
    if (!accepted) {
      report.reason = TerminationReason::kNoProgress;
      break;
    }

    const double relative_decrease = (cost - new_cost) / cost;
    states = std::move(candidate);
    cost = new_cost;
    sys = assemble(problem, states, options.jacobian_mode, true);
    if (relative_decrease < options.cost_tolerance) {
      report.reason = TerminationReason::kCostTolerance;
      report.gradient_norm = 0.0;
      for (const auto& g : sys.gradient) {
        report.gradient_norm = std::max(report.gradient_norm, g.cwiseAbs().maxCoeff());
      }
      break;
    }
  }

  report.final_cost = cost;
  return result;
}

}  // namespace gfusion
