#include "gcflow/stepper.hpp"

#include <algorithm>
#include <cmath>

#include "gcflow/hermite.hpp"

namespace gcflow::stepper {

namespace {

double convergenceThreshold(const NewtonConfig& config, double initialNorm) {
  return std::max(config.atol, config.rtol * initialNorm);
}

/// Dogleg step on the Gauss-Newton model within the given radius.
Eigen::VectorXd doglegStep(DiscreteSystem& system, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& newtonStep, double radius) {
  const double newtonLen = newtonStep.norm();
  if (newtonLen <= radius) return newtonStep;
  const Eigen::VectorXd g = system.applyJacobianTranspose(q);
  const double gNorm2 = g.squaredNorm();
  const Eigen::VectorXd Jg = system.applyJacobian(g);
  const double JgNorm2 = Jg.squaredNorm();
  if (gNorm2 <= 0.0 || JgNorm2 <= 0.0) return (radius / newtonLen) * newtonStep;
  const double beta = gNorm2 / JgNorm2;
  const Eigen::VectorXd cauchy = -beta * g;
  const double cauchyLen = cauchy.norm();
  if (cauchyLen >= radius) return -(radius / std::sqrt(gNorm2)) * g;
  // walk from the Cauchy point toward the Newton point until the radius
  const Eigen::VectorXd d = newtonStep - cauchy;
  const double a = d.squaredNorm();
  const double b = 2.0 * cauchy.dot(d);
  const double c = cauchy.squaredNorm() - radius * radius;
  const double t = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
  return cauchy + t * d;
}

}  // namespace

NewtonResult newton_solve(DiscreteSystem& system, const Eigen::VectorXd& x0,
                          const NewtonConfig& config) {
  NewtonResult result;
  result.x = x0;
  Eigen::VectorXd q = system.residual(result.x);
  double norm = q.norm();
  const double tol = convergenceThreshold(config, norm);
  result.history.push_back(norm);
  result.residualNorm = norm;
  if (norm <= tol) {
    result.converged = true;
    return result;
  }

  double radius = config.initialTrustRadius;
  for (int it = 1; it <= config.maxIterations; ++it) {
    system.linearize(result.x);
    const Eigen::VectorXd newtonStep = system.solveLinearized(-q);

    Eigen::VectorXd qNext;
    double acceptedFraction = 1.0;
    switch (config.damping) {
      case Damping::None: {
        result.x += newtonStep;
        qNext = system.residual(result.x);
        break;
      }
      case Damping::LineSearch: {
        double alpha = 1.0;
        qNext = system.residual(result.x + alpha * newtonStep);
        while (qNext.norm() > (1.0 - config.decreaseCoefficient * alpha) * norm &&
               alpha > config.minStepFraction) {
          alpha *= 0.5;
          qNext = system.residual(result.x + alpha * newtonStep);
        }
        result.x += alpha * newtonStep;
        acceptedFraction = alpha;
        break;
      }
      case Damping::Dogleg: {
        const double qSq = norm * norm;
        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
          const Eigen::VectorXd s = doglegStep(system, q, newtonStep, radius);
          qNext = system.residual(result.x + s);
          const double predicted = qSq - (q + system.applyJacobian(s)).squaredNorm();
          const double actual = qSq - qNext.squaredNorm();
          const double rho = predicted > 0.0 ? actual / predicted : -1.0;
          if (rho < 0.25) {
            radius *= 0.5;
          } else if (rho > 0.75 && s.norm() >= 0.99 * radius) {
            radius *= 2.0;
          }
          if (rho > 0.05) {
            result.x += s;
            acceptedFraction = s.norm() / std::max(newtonStep.norm(), 1e-300);
            accepted = true;
          } else if (radius < 1e-14 * (1.0 + result.x.norm())) {
            result.residualNorm = norm;
            throw NewtonError("trust region collapsed before convergence", result);
          }
        }
        if (!accepted) {
          result.residualNorm = norm;
          throw NewtonError("trust region made no acceptable step", result);
        }
        break;
      }
    }

    q = std::move(qNext);
    norm = q.norm();
    result.iterations = it;
    result.history.push_back(norm);
    result.stepSizes.push_back(acceptedFraction);
    result.residualNorm = norm;
    if (!std::isfinite(norm)) throw NewtonError("residual became non-finite", result);
    if (norm <= tol) {
      result.converged = true;
      return result;
    }
  }
  throw NewtonError("no convergence within the iteration budget (residual " +
                        std::to_string(norm) + ")",
                    result);
}

/// -------------------------------------------------------------------------
/// Toy ODE marching.

namespace {

/// One cubic-interval step of y' = A y: given (y0, y1), solve for (y2, y3).
void odeStepCubic(const Eigen::MatrixXd& A, double tau, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, Eigen::VectorXd& y2, Eigen::VectorXd& y3) {
  const auto& table = hermite::coupling_table();
  const int d = static_cast<int>(y0.size());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd K(2 * d, 2 * d);
  // integral condition: y2 - y0 = tau * sum_l w_l (A y)_l
  K.topLeftCorner(d, d) = I - tau * table.weightD(2) * A;
  K.topRightCorner(d, d) = -tau * table.weightD(3) * A;
  // endpoint collocation: y3 / tau = A y2
  K.bottomLeftCorner(d, d) = -A;
  K.bottomRightCorner(d, d) = I / tau;
  Eigen::VectorXd rhs(2 * d);
  rhs.head(d) = y0 + tau * (table.weightD(0) * (A * y0) + table.weightD(1) * (A * y1));
  rhs.tail(d).setZero();
  const Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
  y2 = sol.head(d);
  y3 = sol.tail(d);
}

/// One linear-interval step: midpoint-in-quadrature average of A y.
void odeStepLinear(const Eigen::MatrixXd& A, double tau, const Eigen::VectorXd& y0,
                   Eigen::VectorXd& y2) {
  const int d = static_cast<int>(y0.size());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd K = I - 0.5 * tau * A;
  const Eigen::VectorXd rhs = y0 + 0.5 * tau * (A * y0);
  y2 = K.partialPivLu().solve(rhs);
}

}  // namespace

OdeTrajectory ode_march(const Eigen::MatrixXd& A, const Eigen::VectorXd& y0,
                        forms::Scheme scheme, double t0, double tau, int steps) {
  OdeTrajectory out;
  out.scheme = scheme;
  out.t0 = t0;
  out.tau = tau;
  Eigen::VectorXd v0 = y0;
  Eigen::VectorXd v1 = tau * (A * y0);  // tau-scaled exact initial derivative
  for (int n = 0; n < steps; ++n) {
    if (scheme == forms::Scheme::Gcc13) {
      Eigen::VectorXd v2, v3;
      odeStepCubic(A, tau, v0, v1, v2, v3);
      out.intervals.push_back({v0, v1, v2, v3});
      v0 = v2;
      v1 = v3;
    } else {
      Eigen::VectorXd v2;
      odeStepLinear(A, tau, v0, v2);
      out.intervals.push_back({v0, v2});
      v0 = v2;
    }
  }
  return out;
}

Eigen::VectorXd OdeTrajectory::evaluateOn(int interval, double s) const {
  const auto& slots = intervals.at(interval);
  if (scheme == forms::Scheme::Gcc13) {
    Eigen::VectorXd out = hermite::Basis::eval(0, s) * slots[0];
    for (int l = 1; l < 4; ++l) out += hermite::Basis::eval(l, s) * slots[l];
    return out;
  }
  return (1.0 - s) * slots[0] + s * slots[1];
}

Eigen::VectorXd OdeTrajectory::evaluate(double t) const {
  const int n = static_cast<int>(intervals.size());
  int k = static_cast<int>(std::floor((t - t0) / tau));
  k = std::clamp(k, 0, n - 1);
  return evaluateOn(k, (t - (t0 + k * tau)) / tau);
}

/// -------------------------------------------------------------------------
/// Flow-interval system.

IntervalSystem::IntervalSystem(const forms::Discretization& disc,
                               const forms::ProblemData& data, const SolverConfig& solver)
    : disc_(&disc), data_(&data), solver_(solver), assembler_(disc) {
  pressureMass_ = assembly::assemble_pressure_mass(disc);

  const bool cubic = disc.scheme == forms::Scheme::Gcc13;
  const auto offsets = disc.blockOffsets();

  if (disc.bcMode == forms::BcMode::Strong) {
    boundaryScalarDofs_ = disc.pair.velocity.boundaryDofs(
        {mesh::FacetMarker::Inflow, mesh::FacetMarker::Wall});
    for (int d : boundaryScalarDofs_) {
      for (int c = 0; c < 2; ++c) {
        constrained_.push_back(offsets[0] + 2 * d + c);
        if (cubic) constrained_.push_back(offsets[2] + 2 * d + c);
      }
    }
  }

  bool hasOutflow = false;
  for (const auto& facet : disc.mesh->facets)
    if (facet.marker == mesh::FacetMarker::Outflow) hasOutflow = true;
  if (!hasOutflow) {
    // gauge fixing: the pressure constants are invisible on an all-Dirichlet
    // boundary, so pin one dof per pressure group
    pins_.push_back(0);
    constrained_.push_back(offsets[1]);
    if (cubic) constrained_.push_back(offsets[3]);
  }
  std::sort(constrained_.begin(), constrained_.end());
}

void IntervalSystem::setInterval(const forms::IntervalState& carried) {
  state_ = carried;
  linearized_ = false;
}

int IntervalSystem::dim() const { return disc_->dim(); }

Eigen::VectorXd IntervalSystem::residual(const Eigen::VectorXd& x) {
  forms::unpack_unknowns(*disc_, x, state_);
  Eigen::VectorXd r = forms::assemble_residual(*disc_, *data_, state_);
  for (int d : constrained_) r[d] = 0.0;
  return r;
}

void IntervalSystem::linearize(const Eigen::VectorXd& x) {
  forms::unpack_unknowns(*disc_, x, state_);
  assembler_.assemble(*data_, state_, sys_, solver_.threadedAssembly);
  assembly::condense(sys_, constrained_);
  if (solver_.kind == LinearSolverKind::Direct) {
    lu_.compute(Eigen::SparseMatrix<double>(sys_.S));
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("interval system: sparse factorization failed");
    precond_.reset();
  } else if (solver_.blockSchur) {
    precond_ = std::make_unique<linalg::BlockSchurPreconditioner>(sys_, pressureMass_,
                                                                  state_.tau, pins_);
  } else {
    precond_.reset();
  }
  linearized_ = true;
}

Eigen::VectorXd IntervalSystem::applyJacobian(const Eigen::VectorXd& v) const {
  if (!linearized_) throw std::logic_error("applyJacobian before linearize");
  return sys_.S * v;
}

Eigen::VectorXd IntervalSystem::applyJacobianTranspose(const Eigen::VectorXd& v) const {
  if (!linearized_) throw std::logic_error("applyJacobianTranspose before linearize");
  return sys_.S.transpose() * v;
}

Eigen::VectorXd IntervalSystem::solveLinearized(const Eigen::VectorXd& b) {
  if (!linearized_) throw std::logic_error("solveLinearized before linearize");
  if (solver_.kind == LinearSolverKind::Direct) return lu_.solve(b);
  linalg::SparseOperator A(sys_.S);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  const auto res = linalg::gmres(A, b, x, solver_.gmres,
                                 solver_.blockSchur ? precond_.get() : nullptr);
  if (!res.converged)
    throw std::runtime_error("interval system: inner solver stalled at residual " +
                             std::to_string(res.residualNorm));
  return x;
}

void IntervalSystem::injectBoundaryValues(Eigen::VectorXd& x) const {
  if (disc_->bcMode != forms::BcMode::Strong) return;
  const auto offsets = disc_->blockOffsets();
  const bool cubic = disc_->scheme == forms::Scheme::Gcc13;
  const double t1 = state_.t0 + state_.tau;
  const auto& coords = disc_->pair.velocity.dofCoords;
  for (int d : boundaryScalarDofs_) {
    const std::array<double, 2> g =
        data_->g ? data_->g(coords[d], t1) : std::array<double, 2>{0.0, 0.0};
    for (int c = 0; c < 2; ++c) x[offsets[0] + 2 * d + c] = g[c];
    if (cubic) {
      const std::array<double, 2> dg =
          data_->dg ? data_->dg(coords[d], t1) : std::array<double, 2>{0.0, 0.0};
      for (int c = 0; c < 2; ++c) x[offsets[2] + 2 * d + c] = state_.tau * dg[c];
    }
  }
}

double IntervalSystem::conditionNumber(int cap) const {
  if (!linearized_) throw std::logic_error("conditionNumber before linearize");
  return linalg::condition_number(sys_.S, cap);
}

/// -------------------------------------------------------------------------
/// Trajectory evaluation.

int Trajectory::intervalOf(double t) const {
  const int n = steps();
  if (n == 0) throw std::out_of_range("empty trajectory");
  const double t0 = intervals.front().t0;
  const double tau = intervals.front().tau;
  int k = static_cast<int>(std::floor((t - t0) / tau));
  return std::clamp(k, 0, n - 1);
}

namespace {

Eigen::VectorXd hermiteCombine(const Eigen::VectorXd& a0, const Eigen::VectorXd& a1,
                               const Eigen::VectorXd& a2, const Eigen::VectorXd& a3,
                               double s, int deriv) {
  return hermite::Basis::eval(0, s, deriv) * a0 + hermite::Basis::eval(1, s, deriv) * a1 +
         hermite::Basis::eval(2, s, deriv) * a2 + hermite::Basis::eval(3, s, deriv) * a3;
}

}  // namespace

Eigen::VectorXd Trajectory::velocity(int interval, double s) const {
  const auto& iv = intervals.at(interval);
  if (scheme == forms::Scheme::Gcc13) return hermiteCombine(iv.v0, iv.v1, iv.v2, iv.v3, s, 0);
  return (1.0 - s) * iv.v0 + s * iv.v2;
}

Eigen::VectorXd Trajectory::velocityRate(int interval, double s) const {
  const auto& iv = intervals.at(interval);
  if (scheme == forms::Scheme::Gcc13)
    return hermiteCombine(iv.v0, iv.v1, iv.v2, iv.v3, s, 1) / iv.tau;
  return (iv.v2 - iv.v0) / iv.tau;
}

Eigen::VectorXd Trajectory::pressure(int interval, double s) const {
  const auto& iv = intervals.at(interval);
  if (scheme == forms::Scheme::Gcc13) return hermiteCombine(iv.p0, iv.p1, iv.p2, iv.p3, s, 0);
  return (1.0 - s) * iv.p0 + s * iv.p2;
}

Eigen::VectorXd Trajectory::velocityAt(double t) const {
  const int k = intervalOf(t);
  const auto& iv = intervals[k];
  return velocity(k, (t - iv.t0) / iv.tau);
}

Eigen::VectorXd Trajectory::pressureAt(double t) const {
  const int k = intervalOf(t);
  const auto& iv = intervals[k];
  return pressure(k, (t - iv.t0) / iv.tau);
}

/// -------------------------------------------------------------------------
/// Time marching.

namespace {

Eigen::VectorXd interpolateVector(const fem::FiniteElementSpace& space,
                                  const std::function<std::array<double, 2>(const mesh::Point&)>& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * space.numDofs);
  if (!f) return out;
  for (int d = 0; d < space.numDofs; ++d) {
    const auto v = f(space.dofCoords[d]);
    out[2 * d] = v[0];
    out[2 * d + 1] = v[1];
  }
  return out;
}

Eigen::VectorXd interpolateScalar(const fem::FiniteElementSpace& space,
                                  const std::function<double(const mesh::Point&)>& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.numDofs);
  if (!f) return out;
  for (int d = 0; d < space.numDofs; ++d) out[d] = f(space.dofCoords[d]);
  return out;
}

}  // namespace

MarchResult march(const forms::Discretization& disc, const forms::ProblemData& data,
                  const MarchConfig& config) {
  if (config.grid.steps < 1) throw std::invalid_argument("march: need at least one step");
  if (config.grid.tau <= 0.0) throw std::invalid_argument("march: step size must be positive");

  MarchResult out;
  out.trajectory.scheme = disc.scheme;

  const bool cubic = disc.scheme == forms::Scheme::Gcc13;
  const int J2 = disc.velocityDofs(), M = disc.pressureDofs();
  const double tau = config.grid.tau;

  forms::IntervalState state;
  state.t0 = config.grid.t0;
  state.tau = tau;
  if (config.initial) {
    state.v0 = interpolateVector(disc.pair.velocity, config.initial->v);
    state.p0 = interpolateScalar(disc.pair.pressure, config.initial->p);
    if (cubic) {
      state.v1 = tau * interpolateVector(disc.pair.velocity, config.initial->dv);
      state.p1 = tau * interpolateScalar(disc.pair.pressure, config.initial->dp);
    }
  } else {
    state.v0 = Eigen::VectorXd::Zero(J2);
    state.p0 = Eigen::VectorXd::Zero(M);
    if (cubic) {
      state.v1 = Eigen::VectorXd::Zero(J2);
      state.p1 = Eigen::VectorXd::Zero(M);
    }
  }

  IntervalSystem system(disc, data, config.solver);

  for (int n = 1; n <= config.grid.steps; ++n) {
    state.t0 = config.grid.t0 + (n - 1) * tau;
    // constant extrapolation of the carried slots as the Newton guess
    state.v2 = state.v0;
    state.p2 = state.p0;
    if (cubic) {
      state.v3 = state.v1;
      state.p3 = state.p1;
    }
    system.setInterval(state);
    Eigen::VectorXd x0 = forms::pack_unknowns(disc, state);
    system.injectBoundaryValues(x0);

    StepRecord record;
    record.step = n;
    record.time = state.t0 + tau;
    NewtonResult solved;
    try {
      solved = newton_solve(system, x0, config.newton);
    } catch (const NewtonError& err) {
      record.newtonIterations = err.result.iterations;
      record.initialResidual = err.result.history.empty() ? 0.0 : err.result.history.front();
      record.residualNorm = err.result.residualNorm;
      record.converged = false;
      out.records.push_back(record);
      return out;  // partial trajectory
    }
    record.newtonIterations = solved.iterations;
    record.initialResidual = solved.history.empty() ? 0.0 : solved.history.front();
    record.residualNorm = solved.residualNorm;
    record.converged = true;

    forms::unpack_unknowns(disc, solved.x, state);

    if (config.kappaStep == n) {
      system.linearize(solved.x);
      try {
        record.kappa2 = system.conditionNumber(config.kappaCap);
      } catch (const linalg::DimensionCapError&) {
        record.kappaSkipped = true;
      }
    }

    out.records.push_back(record);
    out.trajectory.intervals.push_back(state);

    // carry the endpoint slots into the next interval
    state.v0 = state.v2;
    state.p0 = state.p2;
    if (cubic) {
      state.v1 = state.v3;
      state.p1 = state.p3;
    }
  }
  out.completed = true;
  return out;
}

Eigen::VectorXd collocation_divergence(const forms::Discretization& disc,
                                       const forms::ProblemData& data,
                                       const forms::IntervalState& state,
                                       const std::vector<int>& pinnedPressureDofs) {
  if (disc.scheme != forms::Scheme::Gcc13)
    throw std::invalid_argument("collocation divergence is defined for the cubic scheme");
  const Eigen::VectorXd r = forms::assemble_residual(disc, data, state);
  const auto offsets = disc.blockOffsets();
  Eigen::VectorXd div = r.segment(offsets[3], offsets[4] - offsets[3]);
  for (int d : pinnedPressureDofs) div[d] = 0.0;
  return div;
}

}  // namespace gcflow::stepper
