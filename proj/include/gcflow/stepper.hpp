#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcflow/assembly.hpp"
#include "gcflow/forms.hpp"
#include "gcflow/linalg.hpp"

namespace gcflow::stepper {

/// Nonlinear system q(x) = 0 together with the linearization the Newton
/// solver needs: after linearize(x) the apply/solve members refer to the
/// Jacobian at that x.
class DiscreteSystem {
 public:
  virtual ~DiscreteSystem() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd residual(const Eigen::VectorXd& x) = 0;
  virtual void linearize(const Eigen::VectorXd& x) = 0;
  virtual Eigen::VectorXd applyJacobian(const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd applyJacobianTranspose(const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd solveLinearized(const Eigen::VectorXd& b) = 0;
};

enum class Damping { None, LineSearch, Dogleg };

struct NewtonConfig {
  double atol = 1e-10;
  double rtol = 1e-8;
  int maxIterations = 25;
  Damping damping = Damping::None;
  /// sufficient-decrease slope c in ||q(x + a d)|| <= (1 - c a) ||q(x)||
  double decreaseCoefficient = 1e-4;
  /// step-halving floor for the line search
  double minStepFraction = 9.5367431640625e-7;  // 2^-20
  double initialTrustRadius = 1.0;
};

struct NewtonResult {
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;             ///< accepted Newton updates
  double residualNorm = 0.0;      ///< final ||q||
  std::vector<double> history;    ///< ||q|| after each update (front = initial)
  std::vector<double> stepSizes;  ///< accepted fraction of the Newton step per update
};

/// Thrown when Newton exhausts its iteration budget or a step stalls; carries
/// the best iterate reached.
struct NewtonError : std::runtime_error {
  NewtonError(const std::string& what, NewtonResult r)
      : std::runtime_error(what), result(std::move(r)) {}
  NewtonResult result;
};

/// Solve q(x) = 0 from x0; converged when ||q|| <= max(atol, rtol * ||q(x0)||).
NewtonResult newton_solve(DiscreteSystem& system, const Eigen::VectorXd& x0,
                          const NewtonConfig& config = {});

/// -------------------------------------------------------------------------
/// Toy ordinary-differential-equation marching, y' = A y, for scheme-order
/// studies.  Cubic intervals carry (y0, y1, y2, y3) with y1, y3 the
/// tau-scaled endpoint derivatives; linear intervals carry (y0, y2).

struct OdeTrajectory {
  forms::Scheme scheme = forms::Scheme::Gcc13;
  double t0 = 0.0;
  double tau = 0.0;
  std::vector<std::vector<Eigen::VectorXd>> intervals;  ///< per step: the slot vectors
  Eigen::VectorXd evaluate(double t) const;
  Eigen::VectorXd evaluateOn(int interval, double s) const;
};

OdeTrajectory ode_march(const Eigen::MatrixXd& A, const Eigen::VectorXd& y0,
                        forms::Scheme scheme, double t0, double tau, int steps);

/// -------------------------------------------------------------------------
/// Flow-interval system and time marching.

enum class LinearSolverKind { Direct, Gmres };

struct SolverConfig {
  LinearSolverKind kind = LinearSolverKind::Direct;
  bool blockSchur = true;  ///< precondition the iterative solve
  linalg::GmresOptions gmres{1e-10, 0.0, 4000, 0};
  bool threadedAssembly = true;  ///< false forces single-threaded assembly
};

/// Spatial fields fixing the trajectory slots at the initial time; empty
/// functions mean zero fields.
struct InitialCondition {
  std::function<std::array<double, 2>(const mesh::Point&)> v, dv;
  std::function<double(const mesh::Point&)> p, dp;
};

/// One time interval of the flow problem as a Newton-ready system.  The
/// unknowns are the interval's solved slots; boundary rows are rewritten for
/// the strong mode, and one dof of each pressure group is pinned on meshes
/// whose whole boundary is Dirichlet (otherwise the pressure constants are
/// invisible to the equations).
class IntervalSystem final : public DiscreteSystem {
 public:
  IntervalSystem(const forms::Discretization& disc, const forms::ProblemData& data,
                 const SolverConfig& solver);

  /// Fix the carried slots (0/1) and the interval geometry for the next solve.
  void setInterval(const forms::IntervalState& carried);

  int dim() const override;
  Eigen::VectorXd residual(const Eigen::VectorXd& x) override;
  void linearize(const Eigen::VectorXd& x) override;
  Eigen::VectorXd applyJacobian(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd applyJacobianTranspose(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd solveLinearized(const Eigen::VectorXd& b) override;

  /// Overwrite the boundary entries of the guess with the boundary data
  /// (strong mode only; no-op otherwise).
  void injectBoundaryValues(Eigen::VectorXd& x) const;

  /// 2-norm condition number of the current linearized system (dimension cap
  /// applies).  Requires linearize() to have been called.
  double conditionNumber(int cap = 5000) const;

  const std::vector<int>& constrainedUnknowns() const { return constrained_; }
  const std::vector<int>& pinnedPressureDofs() const { return pins_; }
  const forms::IntervalState& state() const { return state_; }

 private:
  const forms::Discretization* disc_;
  const forms::ProblemData* data_;
  SolverConfig solver_;
  assembly::SystemAssembler assembler_;
  assembly::SparseMatrix pressureMass_;
  forms::IntervalState state_;
  std::vector<int> boundaryScalarDofs_;  ///< strong mode: constrained velocity dofs
  std::vector<int> pins_;                ///< pressure-space indices pinned per group
  std::vector<int> constrained_;         ///< global unknown indices rewritten to identity
  assembly::BlockSystem sys_;
  bool linearized_ = false;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::unique_ptr<linalg::BlockSchurPreconditioner> precond_;
};

struct TimeGrid {
  double t0 = 0.0;
  double tau = 0.1;
  int steps = 1;
};

struct StepRecord {
  int step = 0;            ///< 1-based
  double time = 0.0;       ///< interval endpoint
  int newtonIterations = 0;
  double initialResidual = 0.0;
  double residualNorm = 0.0;
  bool converged = false;
  double kappa2 = std::numeric_limits<double>::quiet_NaN();
  bool kappaSkipped = false;  ///< condition number requested but over the cap
};

/// Piecewise-polynomial trajectory of coefficient vectors; cubic intervals
/// are continuously differentiable across interval boundaries by
/// construction, linear intervals are continuous.
struct Trajectory {
  forms::Scheme scheme = forms::Scheme::Gcc13;
  std::vector<forms::IntervalState> intervals;

  int steps() const { return static_cast<int>(intervals.size()); }
  /// Interval index covering time t (final interval owns the right endpoint).
  int intervalOf(double t) const;

  Eigen::VectorXd velocity(int interval, double s) const;
  Eigen::VectorXd velocityRate(int interval, double s) const;  ///< d/dt, unscaled
  Eigen::VectorXd pressure(int interval, double s) const;
  Eigen::VectorXd velocityAt(double t) const;
  Eigen::VectorXd pressureAt(double t) const;
};

struct MarchConfig {
  TimeGrid grid;
  NewtonConfig newton;
  SolverConfig solver;
  std::optional<InitialCondition> initial;  ///< nullopt => zero initial fields
  int kappaStep = 0;   ///< 1-based step whose final linearization gets a condition number; 0 => never
  int kappaCap = 5000;
};

struct MarchResult {
  Trajectory trajectory;       ///< partial on abort
  std::vector<StepRecord> records;
  bool completed = false;      ///< every step converged
};

MarchResult march(const forms::Discretization& disc, const forms::ProblemData& data,
                  const MarchConfig& config);

/// Residual of the endpoint divergence constraint (the collocated mass
/// equation) at the interval's solved state, with pinned gauge rows zeroed.
/// Cubic scheme only.
Eigen::VectorXd collocation_divergence(const forms::Discretization& disc,
                                       const forms::ProblemData& data,
                                       const forms::IntervalState& state,
                                       const std::vector<int>& pinnedPressureDofs = {});

}  // namespace gcflow::stepper
