#include "gcflow/fem.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace gcflow::fem {

GaussRule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on Legendre polynomials, nodes on [-1,1] then mapped
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.points[i] = 0.5 * (1.0 - x);  // descending roots -> ascending points
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::vector<double> lagrange_nodes_1d(int r) {
  if (r < 1) throw std::invalid_argument("lagrange_nodes_1d: r must be >= 1");
  std::vector<double> nodes(r + 1);
  if (r <= 4) {
    for (int i = 0; i <= r; ++i) nodes[i] = static_cast<double>(i) / r;
    return nodes;
  }
  // Gauss-Lobatto: endpoints plus roots of P'_r on (-1,1)
  nodes.front() = 0.0;
  nodes.back() = 1.0;
  for (int i = 1; i < r; ++i) {
    double x = std::cos(M_PI * i / r);  // good initial guess, descending
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= r; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // dP_r and d2P_r from the recurrences
      const double dp = r * (x * p1 - p0) / (x * x - 1.0);
      const double d2p = (2.0 * x * dp - r * (r + 1) * p1) / (1.0 - x * x);
      const double dx = dp / d2p;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[r - i] = 0.5 * (1.0 + x);
  }
  return nodes;
}

ReferenceElement::ReferenceElement(int r) : degree(r), nodes1d(lagrange_nodes_1d(r)) {
  baryWeights_.assign(r + 1, 1.0);
  for (int i = 0; i <= r; ++i)
    for (int j = 0; j <= r; ++j)
      if (j != i) baryWeights_[i] /= (nodes1d[i] - nodes1d[j]);
}

double ReferenceElement::shape1d(int i, double x) const {
  // stable product form; exact cardinal values at the nodes
  const int n = degree + 1;
  for (int j = 0; j < n; ++j)
    if (x == nodes1d[j]) return i == j ? 1.0 : 0.0;
  double prod = 1.0;
  for (int j = 0; j < n; ++j)
    if (j != i) prod *= (x - nodes1d[j]);
  return prod * baryWeights_[i];
}

double ReferenceElement::shape1dDeriv(int i, double x) const {
  const int n = degree + 1;
  double sum = 0.0;
  for (int skip = 0; skip < n; ++skip) {
    if (skip == i) continue;
    double prod = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i && j != skip) prod *= (x - nodes1d[j]);
    sum += prod;
  }
  return sum * baryWeights_[i];
}

double ReferenceElement::shapeValue(int i, double xi, double eta) const {
  const int a = i % (degree + 1), b = i / (degree + 1);
  return shape1d(a, xi) * shape1d(b, eta);
}

std::array<double, 2> ReferenceElement::shapeGrad(int i, double xi, double eta) const {
  const int a = i % (degree + 1), b = i / (degree + 1);
  return {shape1dDeriv(a, xi) * shape1d(b, eta), shape1d(a, xi) * shape1dDeriv(b, eta)};
}

namespace {

struct EdgeKey {
  int lo, hi;
  bool operator<(const EdgeKey& o) const { return std::tie(lo, hi) < std::tie(o.lo, o.hi); }
};

}  // namespace

FiniteElementSpace::FiniteElementSpace(const Mesh& m, int r) : mesh(&m), element(r) {
  const int nInner = r - 1;
  // collect edges
  std::map<EdgeKey, int> edgeIndex;
  for (const auto& cell : m.cells) {
    for (int e = 0; e < 4; ++e) {
      const int u = cell[e], v = cell[(e + 1) % 4];
      EdgeKey key{std::min(u, v), std::max(u, v)};
      edgeIndex.emplace(key, 0);
    }
  }
  int next = m.numNodes();
  for (auto& [key, idx] : edgeIndex) {
    idx = next;
    next += nInner;
  }
  const int interiorOffset = next;
  numDofs = interiorOffset + m.numCells() * nInner * nInner;

  dofCoords.resize(numDofs);
  for (int v = 0; v < m.numNodes(); ++v) dofCoords[v] = m.nodes[v];
  const auto& p = element.nodes1d;
  for (const auto& [key, base] : edgeIndex) {
    const Point& a = m.nodes[key.lo];
    const Point& b = m.nodes[key.hi];
    for (int j = 1; j <= nInner; ++j)
      dofCoords[base + j - 1] = {a[0] + p[j] * (b[0] - a[0]), a[1] + p[j] * (b[1] - a[1])};
  }

  cellDofs.assign(m.numCells(), std::vector<int>(element.numDofs(), -1));
  for (int c = 0; c < m.numCells(); ++c) {
    const auto& cell = m.cells[c];
    const CellGeometry geom = cell_geometry(m, c);
    auto& dofs = cellDofs[c];
    auto local = [r](int a, int b) { return a + (r + 1) * b; };
    // vertices
    dofs[local(0, 0)] = cell[0];
    dofs[local(r, 0)] = cell[1];
    dofs[local(r, r)] = cell[2];
    dofs[local(0, r)] = cell[3];
    // edges: cell edge e runs corner e -> corner (e+1)%4; tensor positions
    // and the parameter index along that direction
    auto edgeDof = [&](int e, int k) {
      // k = 1..r-1 measured from corner e along the edge
      const int u = cell[e], v = cell[(e + 1) % 4];
      EdgeKey key{std::min(u, v), std::max(u, v)};
      const int base = edgeIndex.at(key);
      const int canonical = (u < v) ? k : r - k;  // from the lower vertex id
      return base + canonical - 1;
    };
    for (int k = 1; k < r; ++k) {
      dofs[local(k, 0)] = edgeDof(0, k);
      dofs[local(r, k)] = edgeDof(1, k);
      dofs[local(r - k, r)] = edgeDof(2, k);
      dofs[local(0, r - k)] = edgeDof(3, k);
    }
    // interior
    int base = interiorOffset + c * nInner * nInner;
    for (int b = 1; b < r; ++b) {
      for (int a = 1; a < r; ++a) {
        dofs[local(a, b)] = base;
        dofCoords[base] = geom.map(p[a], p[b]);
        ++base;
      }
    }
    for ([[maybe_unused]] int d : dofs) assert(d >= 0);
  }
}

std::vector<int> FiniteElementSpace::facetDofs(const mesh::BoundaryFacet& facet) const {
  const int r = element.degree;
  std::vector<int> dofs;
  dofs.reserve(r + 1);
  const auto& cell = cellDofs[facet.cell];
  auto local = [r](int a, int b) { return a + (r + 1) * b; };
  for (int k = 0; k <= r; ++k) {
    switch (facet.localEdge) {
      case 0: dofs.push_back(cell[local(k, 0)]); break;
      case 1: dofs.push_back(cell[local(r, k)]); break;
      case 2: dofs.push_back(cell[local(r - k, r)]); break;
      case 3: dofs.push_back(cell[local(0, r - k)]); break;
    }
  }
  return dofs;
}

std::vector<int> FiniteElementSpace::boundaryDofs(
    const std::vector<mesh::FacetMarker>& markers) const {
  std::set<int> unique;
  for (const auto& facet : mesh->facets) {
    bool wanted = false;
    for (auto m : markers) wanted = wanted || facet.marker == m;
    if (!wanted) continue;
    for (int d : facetDofs(facet)) unique.insert(d);
  }
  return {unique.begin(), unique.end()};
}

TaylorHoodPair::TaylorHoodPair(const Mesh& mesh, int velocityDegree)
    : velocity(mesh, velocityDegree), pressure(mesh, velocityDegree - 1) {
  if (velocityDegree < 2)
    throw std::invalid_argument("velocity-pressure pair requires degree >= 2");
}

Point CellGeometry::map(double xi, double eta) const {
  const double n0 = (1 - xi) * (1 - eta), n1 = xi * (1 - eta), n2 = xi * eta,
               n3 = (1 - xi) * eta;
  return {n0 * corners[0][0] + n1 * corners[1][0] + n2 * corners[2][0] + n3 * corners[3][0],
          n0 * corners[0][1] + n1 * corners[1][1] + n2 * corners[2][1] + n3 * corners[3][1]};
}

Eigen::Matrix2d CellGeometry::jacobian(double xi, double eta) const {
  Eigen::Matrix2d J;
  J(0, 0) = -(1 - eta) * corners[0][0] + (1 - eta) * corners[1][0] + eta * corners[2][0] -
            eta * corners[3][0];
  J(0, 1) = -(1 - xi) * corners[0][0] - xi * corners[1][0] + xi * corners[2][0] +
            (1 - xi) * corners[3][0];
  J(1, 0) = -(1 - eta) * corners[0][1] + (1 - eta) * corners[1][1] + eta * corners[2][1] -
            eta * corners[3][1];
  J(1, 1) = -(1 - xi) * corners[0][1] - xi * corners[1][1] + xi * corners[2][1] +
            (1 - xi) * corners[3][1];
  return J;
}

std::optional<Point> CellGeometry::invert(const Point& x, double tol) const {
  Eigen::Vector2d ref(0.5, 0.5);
  for (int iter = 0; iter < 25; ++iter) {
    const Point xm = map(ref[0], ref[1]);
    Eigen::Vector2d res(xm[0] - x[0], xm[1] - x[1]);
    if (res.norm() < 1e-14) break;
    ref -= jacobian(ref[0], ref[1]).inverse() * res;
  }
  const Point xm = map(ref[0], ref[1]);
  if (std::hypot(xm[0] - x[0], xm[1] - x[1]) > 1e-10) return std::nullopt;
  if (ref[0] < -tol || ref[0] > 1 + tol || ref[1] < -tol || ref[1] > 1 + tol)
    return std::nullopt;
  return Point{ref[0], ref[1]};
}

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  CellGeometry geom;
  for (int k = 0; k < 4; ++k) geom.corners[k] = mesh.nodes[mesh.cells[cell][k]];
  return geom;
}

PointValue evaluate(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs,
                    const Point& x) {
  if (coeffs.size() != space.numDofs)
    throw std::invalid_argument("evaluate: coefficient size mismatch");
  const Mesh& mesh = *space.mesh;
  for (int c = 0; c < mesh.numCells(); ++c) {
    // bounding-box prefilter
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (int v : mesh.cells[c]) {
      xlo = std::min(xlo, mesh.nodes[v][0]);
      xhi = std::max(xhi, mesh.nodes[v][0]);
      ylo = std::min(ylo, mesh.nodes[v][1]);
      yhi = std::max(yhi, mesh.nodes[v][1]);
    }
    const double pad = 1e-9 + 0.2 * std::max(xhi - xlo, yhi - ylo);
    if (x[0] < xlo - pad || x[0] > xhi + pad || x[1] < ylo - pad || x[1] > yhi + pad)
      continue;
    const CellGeometry geom = cell_geometry(mesh, c);
    const auto ref = geom.invert(x);
    if (!ref) continue;
    const Eigen::Matrix2d Jinv = geom.jacobian((*ref)[0], (*ref)[1]).inverse();
    PointValue out{0.0, {0.0, 0.0}};
    for (int i = 0; i < space.element.numDofs(); ++i) {
      const double ci = coeffs[space.cellDofs[c][i]];
      out.value += ci * space.element.shapeValue(i, (*ref)[0], (*ref)[1]);
      const auto g = space.element.shapeGrad(i, (*ref)[0], (*ref)[1]);
      // physical gradient via J^{-T} * reference gradient
      out.gradient[0] += ci * (Jinv(0, 0) * g[0] + Jinv(1, 0) * g[1]);
      out.gradient[1] += ci * (Jinv(0, 1) * g[0] + Jinv(1, 1) * g[1]);
    }
    return out;
  }
  throw std::runtime_error("evaluate: point lies outside the mesh");
}

}  // namespace gcflow::fem
