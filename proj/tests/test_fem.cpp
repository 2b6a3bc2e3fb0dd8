#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gcflow/fem.hpp"
#include "gcflow/mesh.hpp"

using namespace gcflow;
using fem::FiniteElementSpace;
using fem::ReferenceElement;

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
  for (int n = 1; n <= 8; ++n) {
    const auto rule = fem::gauss_legendre(n);
    REQUIRE(rule.points.size() == static_cast<size_t>(n));
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    // exact through degree 2n-1 on [0,1]: integral of x^k is 1/(k+1)
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += rule.weights[i] * std::pow(rule.points[i], k);
      CHECK(q == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
    // not exact at degree 2n (catches an accidentally-too-generous rule)
    double q = 0.0;
    for (int i = 0; i < n; ++i) q += rule.weights[i] * std::pow(rule.points[i], 2 * n);
    CHECK(std::abs(q - 1.0 / (2 * n + 1)) > 1e-12);
  }
}

TEST_CASE("1d node sets: equidistant through quartic, lobatto beyond") {
  const auto n3 = fem::lagrange_nodes_1d(3);
  REQUIRE(n3.size() == 4);
  CHECK(n3[1] == doctest::Approx(1.0 / 3.0));
  const auto n5 = fem::lagrange_nodes_1d(5);
  REQUIRE(n5.size() == 6);
  CHECK(n5.front() == 0.0);
  CHECK(n5.back() == 1.0);
  // interior nodes are roots of P5' mapped to [0,1]; frozen reference values
  CHECK(n5[1] == doctest::Approx(0.5 * (1.0 - 0.7650553239294647)).epsilon(1e-12));
  CHECK(n5[2] == doctest::Approx(0.5 * (1.0 - 0.2852315164806451)).epsilon(1e-12));
  for (size_t i = 1; i < n5.size(); ++i) CHECK(n5[i] > n5[i - 1]);
}

TEST_CASE("reference element: cardinal values and partition of unity") {
  for (int r : {1, 2, 3, 4}) {
    ReferenceElement el(r);
    // delta property at tensor nodes, exact in double
    for (int i = 0; i < el.numDofs(); ++i) {
      for (int j = 0; j < el.numDofs(); ++j) {
        const int a = j % (r + 1), b = j / (r + 1);
        const double v = el.shapeValue(i, el.nodes1d[a], el.nodes1d[b]);
        CHECK(v == (i == j ? 1.0 : 0.0));
      }
    }
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const double xi = unif(rng), eta = unif(rng);
      double sum = 0.0, gx = 0.0, gy = 0.0;
      for (int i = 0; i < el.numDofs(); ++i) {
        sum += el.shapeValue(i, xi, eta);
        const auto g = el.shapeGrad(i, xi, eta);
        gx += g[0];
        gy += g[1];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(gx == doctest::Approx(0.0).epsilon(1e-11));
      CHECK(gy == doctest::Approx(0.0).epsilon(1e-11));
    }
  }
}

TEST_CASE("reference element reproduces a Q_r polynomial and its gradient") {
  const int r = 3;
  ReferenceElement el(r);
  auto f = [](double x, double y) {
    return (1.0 + 2.0 * x - x * x * x) * (0.5 - y + 3.0 * y * y * y);
  };
  auto fx = [](double x, double y) {
    return (2.0 - 3.0 * x * x) * (0.5 - y + 3.0 * y * y * y);
  };
  auto fy = [](double x, double y) {
    return (1.0 + 2.0 * x - x * x * x) * (-1.0 + 9.0 * y * y);
  };
  std::vector<double> coeff(el.numDofs());
  for (int i = 0; i < el.numDofs(); ++i) {
    const int a = i % (r + 1), b = i / (r + 1);
    coeff[i] = f(el.nodes1d[a], el.nodes1d[b]);
  }
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double xi = unif(rng), eta = unif(rng);
    double v = 0.0, dx = 0.0, dy = 0.0;
    for (int i = 0; i < el.numDofs(); ++i) {
      v += coeff[i] * el.shapeValue(i, xi, eta);
      const auto g = el.shapeGrad(i, xi, eta);
      dx += coeff[i] * g[0];
      dy += coeff[i] * g[1];
    }
    CHECK(v == doctest::Approx(f(xi, eta)).epsilon(1e-12));
    CHECK(dx == doctest::Approx(fx(xi, eta)).epsilon(1e-11));
    CHECK(dy == doctest::Approx(fy(xi, eta)).epsilon(1e-11));
  }
}

TEST_CASE("global numbering: dimensions on the n x n unit square") {
  // continuous Q_r on an n x n grid has (n r + 1)^2 dofs
  for (int n : {1, 2, 3}) {
    const auto m = mesh::generate_unit_square(n);
    for (int r : {1, 2, 3, 4}) {
      FiniteElementSpace space(m, r);
      CHECK(space.numDofs == (n * r + 1) * (n * r + 1));
    }
  }
  // frozen: the convergence-study level-0 pairing on the 2x2 square
  const auto m2 = mesh::generate_unit_square(2);
  fem::TaylorHoodPair pair(m2, 4);
  CHECK(pair.velocity.numDofs == 81);
  CHECK(pair.pressure.numDofs == 49);
  CHECK(pair.numVelocityDofs() + pair.numPressureDofs() == 211);
}

TEST_CASE("neighbouring cells agree on shared-edge dofs") {
  const auto m = mesh::generate_unit_square(3);
  for (int r : {2, 3, 4}) {
    FiniteElementSpace space(m, r);
    // interpolate a global polynomial by dof coordinates, then check continuity:
    // every dof id must receive a single consistent coordinate, and evaluating
    // cell-locally at shared edge midpoints must agree between neighbours.
    for (int c = 0; c < m.numCells(); ++c) {
      const auto geom = fem::cell_geometry(m, c);
      for (int i = 0; i < space.element.numDofs(); ++i) {
        const int a = i % (r + 1), b = i / (r + 1);
        const auto x = geom.map(space.element.nodes1d[a], space.element.nodes1d[b]);
        const auto& stored = space.dofCoords[space.cellDofs[c][i]];
        CHECK(std::hypot(x[0] - stored[0], x[1] - stored[1]) < 1e-12);
      }
    }
  }
}

TEST_CASE("interpolation of a global cubic is exact across the mesh") {
  const auto m = mesh::generate_unit_square(3);
  FiniteElementSpace space(m, 3);
  auto f = [](double x, double y) { return x * x * x - 2.0 * x * y + y * y - 0.25 * y * y * y; };
  Eigen::VectorXd coeffs(space.numDofs);
  for (int i = 0; i < space.numDofs; ++i)
    coeffs[i] = f(space.dofCoords[i][0], space.dofCoords[i][1]);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  for (int trial = 0; trial < 40; ++trial) {
    const double x = unif(rng), y = unif(rng);
    const auto pv = fem::evaluate(space, coeffs, {x, y});
    CHECK(pv.value == doctest::Approx(f(x, y)).epsilon(1e-11));
    CHECK(pv.gradient[0] == doctest::Approx(3 * x * x - 2 * y).epsilon(1e-9));
    CHECK(pv.gradient[1] == doctest::Approx(-2 * x + 2 * y - 0.75 * y * y).epsilon(1e-9));
  }
  CHECK_THROWS(fem::evaluate(space, coeffs, {5.0, 5.0}));
}

TEST_CASE("facet and boundary dofs") {
  const auto m = mesh::generate_unit_square(2);
  FiniteElementSpace space(m, 2);
  // each boundary facet of a Q2 space carries 3 dofs on the facet line
  for (const auto& facet : m.facets) {
    const auto dofs = space.facetDofs(facet);
    REQUIRE(dofs.size() == 3);
    const auto ends = m.facetNodes(facet);
    const auto& a = m.nodes[ends[0]];
    const auto& b = m.nodes[ends[1]];
    for (size_t k = 0; k < dofs.size(); ++k) {
      const auto& p = space.dofCoords[dofs[k]];
      // collinear with the facet segment
      const double cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
      CHECK(std::abs(cross) < 1e-12);
    }
    // ordered from corner e to corner e+1
    CHECK(space.dofCoords[dofs.front()][0] == doctest::Approx(a[0]).epsilon(1e-14));
    CHECK(space.dofCoords[dofs.back()][1] == doctest::Approx(b[1]).epsilon(1e-14));
  }
  // unit square: all markers are Wall; 2x2 Q2 grid boundary has 16 nodes
  const auto bd = space.boundaryDofs({mesh::FacetMarker::Wall});
  CHECK(bd.size() == 16);
  const auto none = space.boundaryDofs({mesh::FacetMarker::Inflow});
  CHECK(none.empty());
}

TEST_CASE("bilinear geometry: map, jacobian, inversion on a skewed cell") {
  fem::CellGeometry geom;
  geom.corners = {{{0.0, 0.0}, {1.2, 0.1}, {1.4, 1.3}, {-0.2, 0.9}}};
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double xi = unif(rng), eta = unif(rng);
    const auto x = geom.map(xi, eta);
    const auto back = geom.invert(x);
    REQUIRE(back.has_value());
    CHECK((*back)[0] == doctest::Approx(xi).epsilon(1e-9));
    CHECK((*back)[1] == doctest::Approx(eta).epsilon(1e-9));
    // finite-difference check of the jacobian
    const double h = 1e-7;
    const auto xp = geom.map(xi + h, eta);
    const auto yp = geom.map(xi, eta + h);
    const auto J = geom.jacobian(xi, eta);
    CHECK(J(0, 0) == doctest::Approx((xp[0] - x[0]) / h).epsilon(1e-5));
    CHECK(J(1, 0) == doctest::Approx((xp[1] - x[1]) / h).epsilon(1e-5));
    CHECK(J(0, 1) == doctest::Approx((yp[0] - x[0]) / h).epsilon(1e-5));
    CHECK(J(1, 1) == doctest::Approx((yp[1] - x[1]) / h).epsilon(1e-5));
  }
  CHECK_FALSE(geom.invert({9.0, 9.0}).has_value());
}
