#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <stdexcept>
#include <vector>

#include "gcflow/assembly.hpp"

namespace gcflow::linalg {

/// Abstract square operator y = A x.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual int size() const = 0;
  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
};

/// Operator view of an assembled sparse matrix (not owned; must outlive the view).
class SparseOperator final : public LinearOperator {
 public:
  explicit SparseOperator(const assembly::SparseMatrix& A) : A_(&A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("SparseOperator: matrix not square");
  }
  int size() const override { return static_cast<int>(A_->rows()); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = *A_ * x; }

 private:
  const assembly::SparseMatrix* A_;
};

/// Operator view of a dense matrix (not owned; must outlive the view).
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(const Eigen::MatrixXd& A) : A_(&A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("DenseOperator: matrix not square");
  }
  int size() const override { return static_cast<int>(A_->rows()); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = *A_ * x; }

 private:
  const Eigen::MatrixXd* A_;
};

struct GmresOptions {
  double rtol = 1e-10;
  double atol = 0.0;
  int maxIterations = 1000;
  /// Krylov subspace size per cycle; <= 0 requests the full (unrestarted) space.
  int restart = 50;
};

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double residualNorm = 0.0;       ///< true final residual norm ||b - A x||
  std::vector<double> history;     ///< residual estimate after each iteration
};

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt and Givens
/// rotations.  On success the true residual satisfies
/// ||b - A x|| <= max(rtol * ||b||, atol); on failure (iteration budget or
/// stagnation) x carries the best iterate reached and `converged` is false.
/// x is used as the initial guess.
GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                  const GmresOptions& options = {},
                  const LinearOperator* preconditioner = nullptr);

/// Block upper-triangular preconditioner for the interval saddle systems.
///
/// The unknown groups are swept last-to-first.  Each velocity group gets an
/// inner sparse direct solve with its diagonal block; each pressure group gets
/// a pressure-mass solve scaled like the divergence rows that produce it:
/// tau/2 for the value-pair pressure, 1 for the derivative-pair pressure
/// (cubic layout).  Couplings to already-computed groups are moved to the
/// right-hand side, which carries the tau/12 cross-pair divergence scaling.
/// With identity diagonal blocks, identity pressure mass, vanished couplings
/// and tau = 2 the sweep reduces to the identity.
class BlockSchurPreconditioner final : public LinearOperator {
 public:
  /// `system` must be assembled (and, if used the stepper way, condensed);
  /// `pressureMass` is the pressure-space mass matrix; `pinnedPressureDofs`
  /// are pressure-space indices whose system rows were rewritten to identity,
  /// mirrored here so the sweep reproduces those rows exactly.
  BlockSchurPreconditioner(const assembly::BlockSystem& system,
                           const assembly::SparseMatrix& pressureMass, double tau,
                           std::vector<int> pinnedPressureDofs = {});
  int size() const override { return n_; }
  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const override;

 private:
  using ColMajor = Eigen::SparseMatrix<double>;
  int n_ = 0;
  bool cubic_ = false;
  std::vector<int> offsets_;
  double tau_ = 1.0;
  std::vector<int> pins_;
  ColMajor F1_, F4_, Mp_;
  Eigen::SparseLU<ColMajor> luF1_, luF4_, luMp_;
  assembly::SparseMatrix B01_, B02_, B03_, B12_;  // retained upper couplings
};

/// Thrown when a dense spectral computation would exceed its dimension cap.
struct DimensionCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 2-norm condition number from the full singular value decomposition.
/// Throws DimensionCapError when the matrix dimension exceeds `cap` (such
/// entries are reported as skipped by callers); returns +inf for singular A.
double condition_number(const Eigen::MatrixXd& A, int cap = 5000);
double condition_number(const assembly::SparseMatrix& A, int cap = 5000);

}  // namespace gcflow::linalg
