#pragma once

/// Continuous tensor-product Lagrange elements Q_r on quadrilateral meshes,
/// with the inf-sup stable Q_r / Q_{r-1} velocity-pressure pairing, Gauss
/// quadrature helpers, and point evaluation of discrete fields.

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "gcflow/mesh.hpp"

namespace gcflow::fem {

using mesh::Mesh;
using mesh::Point;

/// 1D Gauss-Legendre rule on [0,1].
struct GaussRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};
GaussRule1D gauss_legendre(int n);

/// 1D interpolation node set on [0,1]: equidistant for r <= 4, Gauss-Lobatto
/// for r >= 5 (equidistant Lagrange bases degrade beyond quartic order).
std::vector<double> lagrange_nodes_1d(int r);

/// Tensor-product Lagrange element of degree r on the reference square
/// [0,1]^2.  Local index i = a + (r+1)*b for tensor position (a, b).
struct ReferenceElement {
  explicit ReferenceElement(int degree);

  int degree;
  std::vector<double> nodes1d;

  int numDofs() const { return (degree + 1) * (degree + 1); }

  double shapeValue(int i, double xi, double eta) const;
  std::array<double, 2> shapeGrad(int i, double xi, double eta) const;

  double shape1d(int i, double x) const;
  double shape1dDeriv(int i, double x) const;

 private:
  std::vector<double> baryWeights_;
};

/// Scalar continuous Lagrange space on a quad mesh.  Global dofs are grouped
/// vertex / edge / cell-interior; edge dofs are parametrized from the lower
/// global vertex id so neighbouring cells agree.
struct FiniteElementSpace {
  const Mesh* mesh = nullptr;
  ReferenceElement element;
  int numDofs = 0;
  std::vector<std::vector<int>> cellDofs;  // tensor-ordered per cell
  std::vector<Point> dofCoords;

  explicit FiniteElementSpace(const Mesh& m, int degree);

  /// Scalar dofs lying on facets with any of the given markers.
  std::vector<int> boundaryDofs(const std::vector<mesh::FacetMarker>& markers) const;

  /// Dofs on one facet, ordered along the facet.
  std::vector<int> facetDofs(const mesh::BoundaryFacet& facet) const;
};

/// Velocity-pressure pair Q_r / Q_{r-1}; requires r >= 2.
struct TaylorHoodPair {
  FiniteElementSpace velocity;
  FiniteElementSpace pressure;

  TaylorHoodPair(const Mesh& mesh, int velocityDegree);

  /// Interleaved vector-valued velocity dof id for (scalar node, component).
  static int vdof(int node, int comp) { return 2 * node + comp; }
  int numVelocityDofs() const { return 2 * velocity.numDofs; }
  int numPressureDofs() const { return pressure.numDofs; }
};

/// Geometry helpers for the bilinear cell map.
struct CellGeometry {
  std::array<Point, 4> corners;

  Point map(double xi, double eta) const;
  Eigen::Matrix2d jacobian(double xi, double eta) const;
  /// Newton inversion of the bilinear map; nullopt if the point lies outside
  /// [0,1]^2 beyond the tolerance.
  std::optional<Point> invert(const Point& x, double tol = 1e-10) const;
};
CellGeometry cell_geometry(const Mesh& mesh, int cell);

/// Point evaluation of a scalar discrete field (value and gradient).  Cells
/// are searched with a bounding-box prefilter; throws if no cell contains x.
struct PointValue {
  double value;
  std::array<double, 2> gradient;
};
PointValue evaluate(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs,
                    const Point& x);

}  // namespace gcflow::fem
