#pragma once

/// Weak residuals and Jacobians of the incompressible Navier-Stokes time
/// integrators on one time interval, for Q_r / Q_{r-1} velocity-pressure
/// pairs, with either strong or Nitsche-type Dirichlet boundary treatment.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string_view>
#include <vector>

#include "gcflow/fem.hpp"
#include "gcflow/mesh.hpp"

namespace gcflow::forms {

using mesh::Point;

/// Supported time discretizations.
enum class Scheme {
  Gcc13,  ///< cubic Hermite trajectories, C1 in time: one collocation and one
          ///< variational condition per interval
  Cgp1,   ///< piecewise-linear trajectories; equivalent to Crank-Nicolson for
          ///< linear problems
};
const char* scheme_name(Scheme s);
Scheme scheme_from_name(std::string_view name);

/// How Dirichlet boundary values enter the discrete system.
enum class BcMode {
  Strong,   ///< boundary dofs set to interpolated data, rows/cols condensed
  Nitsche,  ///< weak enforcement through consistent boundary terms
};
const char* bc_name(BcMode mode);
BcMode bc_from_name(std::string_view name);

/// Penalty weights of the Nitsche boundary terms: eta1 scales the viscous
/// penalty, eta2 the normal-flux penalty (both divided by the cell diameter).
struct NitscheParams {
  double eta1 = 35.0;
  double eta2 = 35.0;
};

/// Time-dependent vector field (body force or boundary data).  An empty
/// function is treated as identically zero.
using TimeField = std::function<std::array<double, 2>(const Point&, double)>;

/// Problem coefficients: viscosity nu, body force f with time derivative df,
/// Dirichlet data g with time derivative dg.
struct ProblemData {
  double nu = 1.0;
  TimeField f, df, g, dg;
};

/// Coefficients of one time interval [t0, t0 + tau].
///
/// Slot semantics per field: 0 = value at t0, 1 = tau-scaled time derivative
/// at t0, 2 = value at t0 + tau, 3 = tau-scaled time derivative at t0 + tau.
/// The cubic scheme uses all four slots, carries (0, 1) over from the previous
/// interval, and solves for (2, 3).  The linear scheme uses slots 0 (previous
/// value, known) and 2 (new value, unknown); slots 1 and 3 stay empty.
struct IntervalState {
  double t0 = 0.0;
  double tau = 1.0;
  Eigen::VectorXd v0, v1, v2, v3;  ///< interleaved velocity, each 2*J
  Eigen::VectorXd p0, p1, p2, p3;  ///< pressure, each M
};

/// Precomputed mesh/element data shared by residual and Jacobian evaluation:
/// reference shape values, per-cell physical gradients and quadrature
/// measures, and (in Nitsche mode) boundary-facet traces.
struct Discretization {
  const mesh::Mesh* mesh = nullptr;
  fem::TaylorHoodPair pair;
  Scheme scheme;
  BcMode bcMode;
  NitscheParams nitsche;

  Discretization(const mesh::Mesh& m, int velocityDegree, Scheme s, BcMode bc,
                 NitscheParams np = {});

  int velocityDofs() const { return pair.numVelocityDofs(); }
  int pressureDofs() const { return pair.numPressureDofs(); }

  /// Unknown-vector layout: cubic scheme (v value | p value | v deriv | p
  /// deriv), linear scheme (v | p).  Returns the block start offsets with a
  /// trailing total size.
  std::vector<int> blockOffsets() const;
  int dim() const { return blockOffsets().back(); }

  /// Global unknown indices coupled by one cell, ordered local-velocity
  /// blocks first (interleaved components), then pressure, repeated per
  /// unknown group.
  std::vector<int> cellUnknowns(int cell) const;
  std::vector<int> facetUnknowns(int dirichletFacet) const;

  int nq1 = 0;                 ///< 1D quadrature points per direction
  std::vector<double> qwRef;   ///< tensor reference weights, size nq1*nq1
  std::vector<std::vector<double>> vShape, pShape;  ///< [qpoint][shape]

  struct CellData {
    std::vector<double> jxw;   ///< |det J| * weight per qpoint
    std::vector<Point> xq;     ///< physical quadrature points
    std::vector<std::vector<std::array<double, 2>>> vGrad;  ///< [q][shape][d]
  };
  std::vector<CellData> cells;

  /// Dirichlet boundary facet traces (inflow + wall markers; outflow facets
  /// carry the do-nothing condition and never appear here).  Empty in strong
  /// mode.
  struct FacetData {
    int facet = -1;  ///< index into mesh->facets
    int cell = -1;
    double h = 0.0;                 ///< owner cell diameter
    std::array<double, 2> normal{};  ///< unit outward normal of the fluid
    std::vector<double> w;           ///< quadrature weight * facet length
    std::vector<Point> xq;
    std::vector<std::vector<double>> vVal, pVal;
    std::vector<std::vector<std::array<double, 2>>> vGrad;
  };
  std::vector<FacetData> dirichletFacets;
};

/// Residual and (optionally) Jacobian contribution of one cell or facet.
/// Row and column layout both follow `dofs`.
struct LocalBlock {
  std::vector<int> dofs;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  ///< filled only when requested
};

/// Interior contribution of one cell.
void cell_block(const Discretization& disc, const ProblemData& data,
                const IntervalState& state, int cell, bool wantJacobian,
                LocalBlock& out);

/// Nitsche boundary contribution of one Dirichlet facet (index into
/// disc.dirichletFacets; throws std::out_of_range otherwise).
void facet_block(const Discretization& disc, const ProblemData& data,
                 const IntervalState& state, int dirichletFacet,
                 bool wantJacobian, LocalBlock& out);

/// Unknown vector of the interval: cubic scheme (v2 | p2 | v3 | p3), linear
/// scheme (v2 | p2).
Eigen::VectorXd pack_unknowns(const Discretization& disc, const IntervalState& state);
void unpack_unknowns(const Discretization& disc, const Eigen::VectorXd& x,
                     IntervalState& state);

/// Full residual vector (serial accumulation over cells, then facets).
Eigen::VectorXd assemble_residual(const Discretization& disc, const ProblemData& data,
                                  const IntervalState& state);

/// Dense Jacobian, intended for small systems and derivative verification.
Eigen::MatrixXd assemble_dense_jacobian(const Discretization& disc,
                                        const ProblemData& data,
                                        const IntervalState& state);

}  // namespace gcflow::forms
