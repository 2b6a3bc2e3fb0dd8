#include "gcflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gcflow::linalg {

namespace {

/// Solve the (j+1) x (j+1) upper-triangular system R y = g in place.
Eigen::VectorXd backSubstitute(const Eigen::MatrixXd& R, const Eigen::VectorXd& g, int j) {
  Eigen::VectorXd y(j + 1);
  for (int i = j; i >= 0; --i) {
    double s = g[i];
    for (int k = i + 1; k <= j; ++k) s -= R(i, k) * y[k];
    y[i] = s / R(i, i);
  }
  return y;
}

}  // namespace

GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                  const GmresOptions& options, const LinearOperator* preconditioner) {
  const int n = A.size();
  if (b.size() != n) throw std::invalid_argument("gmres: rhs size mismatch");
  if (x.size() != n) {
    x = Eigen::VectorXd::Zero(n);
  }
  GmresResult result;
  const double tol = std::max(options.rtol * b.norm(), options.atol);
  const int m = std::min(options.restart > 0 ? options.restart : n, n);

  Eigen::VectorXd r(n), w(n), z(n);
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd g(m + 1), cs(m), sn(m);

  auto trueResidual = [&]() {
    A.apply(x, r);
    r = b - r;
    return r.norm();
  };

  double beta = trueResidual();
  result.residualNorm = beta;
  if (beta <= tol) {
    result.converged = true;
    return result;
  }

  double prevCycleResidual = std::numeric_limits<double>::infinity();
  while (result.iterations < options.maxIterations) {
    // start a cycle from the current true residual (already in r)
    V.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    int j = 0;
    double estimate = beta;
    for (; j < m && result.iterations < options.maxIterations; ++j) {
      if (preconditioner) {
        preconditioner->apply(V.col(j), z);
      } else {
        z = V.col(j);
      }
      A.apply(z, w);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      const bool breakdown = H(j + 1, j) < 1e-300;
      if (!breakdown) V.col(j + 1) = w / H(j + 1, j);

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = denom > 0.0 ? H(j, j) / denom : 1.0;
      sn[j] = denom > 0.0 ? H(j + 1, j) / denom : 0.0;
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      estimate = std::abs(g[j + 1]);
      ++result.iterations;
      result.history.push_back(estimate);
      if (estimate <= tol || breakdown) {
        ++j;
        break;
      }
    }
    // form the cycle update from the j-dimensional subspace
    const Eigen::VectorXd y = backSubstitute(H, g, j - 1);
    w = V.leftCols(j) * y;
    if (preconditioner) {
      preconditioner->apply(w, z);
      x += z;
    } else {
      x += w;
    }

    beta = trueResidual();
    result.residualNorm = beta;
    if (beta <= tol) {
      result.converged = true;
      return result;
    }
    if (beta >= prevCycleResidual * (1.0 - 1e-12)) {
      // stagnation across a full cycle: stop with the best iterate in x
      return result;
    }
    prevCycleResidual = beta;
  }
  return result;
}

namespace {

/// Rewrite the given rows and columns of a square sparse matrix to identity.
void pinIdentity(Eigen::SparseMatrix<double>& A, const std::vector<int>& pins) {
  if (pins.empty()) return;
  std::vector<char> mask(A.rows(), 0);
  for (int d : pins) {
    if (d < 0 || d >= static_cast<int>(mask.size()))
      throw std::invalid_argument("preconditioner: pinned pressure dof out of range");
    mask[d] = 1;
  }
  for (int col = 0; col < A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
      if (mask[it.row()] || mask[col]) it.valueRef() = it.row() == col ? 1.0 : 0.0;
    }
  }
}

}  // namespace

BlockSchurPreconditioner::BlockSchurPreconditioner(const assembly::BlockSystem& system,
                                                   const assembly::SparseMatrix& pressureMass,
                                                   double tau,
                                                   std::vector<int> pinnedPressureDofs)
    : offsets_(system.blockOffsets), tau_(tau), pins_(std::move(pinnedPressureDofs)) {
  if (offsets_.size() != 5 && offsets_.size() != 3)
    throw std::invalid_argument("preconditioner: unrecognized block layout");
  cubic_ = offsets_.size() == 5;
  n_ = offsets_.back();
  if (system.S.rows() != n_) throw std::invalid_argument("preconditioner: offsets do not match matrix");
  const int M = offsets_[2] - offsets_[1];
  if (pressureMass.rows() != M || pressureMass.cols() != M)
    throw std::invalid_argument("preconditioner: pressure mass has wrong dimension");

  F1_ = ColMajor(assembly::extract_block(system, 0, 0));
  luF1_.compute(F1_);
  if (luF1_.info() != Eigen::Success)
    throw std::runtime_error("preconditioner: value-pair velocity block factorization failed");

  Mp_ = ColMajor(pressureMass);
  pinIdentity(Mp_, pins_);
  luMp_.compute(Mp_);
  if (luMp_.info() != Eigen::Success)
    throw std::runtime_error("preconditioner: pressure mass factorization failed");

  B01_ = assembly::extract_block(system, 0, 1);
  if (cubic_) {
    F4_ = ColMajor(assembly::extract_block(system, 2, 2));
    luF4_.compute(F4_);
    if (luF4_.info() != Eigen::Success)
      throw std::runtime_error("preconditioner: derivative-pair velocity block factorization failed");
    B02_ = assembly::extract_block(system, 0, 2);
    B03_ = assembly::extract_block(system, 0, 3);
    B12_ = assembly::extract_block(system, 1, 2);
  }
}

void BlockSchurPreconditioner::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  z.resize(n_);
  const int J2 = offsets_[1] - offsets_[0];
  const int M = offsets_[2] - offsets_[1];
  auto restorePins = [&](Eigen::VectorXd& zp, const Eigen::VectorXd& rp) {
    for (int d : pins_) zp[d] = rp[d];
  };
  if (!cubic_) {
    const Eigen::VectorXd rp = r.segment(offsets_[1], M);
    Eigen::VectorXd zp = (2.0 / tau_) * luMp_.solve(rp);
    restorePins(zp, rp);
    const Eigen::VectorXd rv = r.head(J2) - B01_ * zp;
    z.head(J2) = luF1_.solve(rv);
    z.segment(offsets_[1], M) = zp;
    return;
  }
  const Eigen::VectorXd rp3 = r.segment(offsets_[3], M);
  Eigen::VectorXd zp3 = luMp_.solve(rp3);
  restorePins(zp3, rp3);
  const Eigen::VectorXd zv3 = luF4_.solve(r.segment(offsets_[2], J2));
  const Eigen::VectorXd rp2 = r.segment(offsets_[1], M) - B12_ * zv3;
  Eigen::VectorXd zp2 = (2.0 / tau_) * luMp_.solve(rp2);
  restorePins(zp2, r.segment(offsets_[1], M));
  const Eigen::VectorXd rv2 = r.head(J2) - B01_ * zp2 - B02_ * zv3 - B03_ * zp3;
  z.head(J2) = luF1_.solve(rv2);
  z.segment(offsets_[1], M) = zp2;
  z.segment(offsets_[2], J2) = zv3;
  z.segment(offsets_[3], M) = zp3;
}

double condition_number(const Eigen::MatrixXd& A, int cap) {
  if (A.rows() > cap || A.cols() > cap)
    throw DimensionCapError("condition number skipped: dimension " + std::to_string(A.rows()) +
                            " exceeds cap " + std::to_string(cap));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0) throw std::invalid_argument("condition number of empty matrix");
  const double smin = sigma[sigma.size() - 1];
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sigma[0] / smin;
}

double condition_number(const assembly::SparseMatrix& A, int cap) {
  if (A.rows() > cap || A.cols() > cap)
    throw DimensionCapError("condition number skipped: dimension " + std::to_string(A.rows()) +
                            " exceeds cap " + std::to_string(cap));
  return condition_number(Eigen::MatrixXd(A), cap);
}

}  // namespace gcflow::linalg
