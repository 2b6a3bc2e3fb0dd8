#include "gcflow/hermite.hpp"

#include <cassert>
#include <cmath>

namespace gcflow::hermite {

std::array<Rational, 4> Basis::coefficients(int l) {
  // Cardinal cubics: basis_0/2 interpolate values, basis_1/3 derivatives.
  switch (l) {
    case 0: return {Rational(1), Rational(0), Rational(-3), Rational(2)};
    case 1: return {Rational(0), Rational(1), Rational(-2), Rational(1)};
    case 2: return {Rational(0), Rational(0), Rational(3), Rational(-2)};
    case 3: return {Rational(0), Rational(0), Rational(-1), Rational(1)};
    default: assert(false); return {};
  }
}

double Basis::eval(int l, double s, int deriv) {
  const auto c = coefficients(l);
  auto cd = [&](int k) { return static_cast<double>(boost::rational_cast<long long>(c[k])); };
  switch (deriv) {
    case 0: return cd(0) + s * (cd(1) + s * (cd(2) + s * cd(3)));
    case 1: return cd(1) + s * (2.0 * cd(2) + s * 3.0 * cd(3));
    case 2: return 2.0 * cd(2) + s * 6.0 * cd(3);
    case 3: return 6.0 * cd(3);
    default: return 0.0;
  }
}

QuadratureRule hermite_quadrature_k3() {
  QuadratureRule rule;
  rule.wLeft = 1.0 / 3.0;
  rule.wRight = -1.0 / 3.0;
  rule.nodes = {-1.0, 1.0};
  rule.nodeWeights = {1.0, 1.0};
  return rule;
}

double QuadratureRule::applyReference(double gl, double gr, double dgl,
                                      double dgr) const {
  return wLeft * dgl + nodeWeights[0] * gl + nodeWeights[1] * gr + wRight * dgr;
}

double QuadratureRule::applyMapped(double a, double b, double ga, double gb,
                                   double dga, double dgb) const {
  const double half = 0.5 * (b - a);
  return half * half * (wLeft * dga + wRight * dgb) +
         half * (nodeWeights[0] * ga + nodeWeights[1] * gb);
}

std::array<double, 4> hermite_interpolate(double valueLeft, double derivLeft,
                                          double valueRight, double derivRight,
                                          double tau) {
  return {valueLeft, tau * derivLeft, valueRight, tau * derivRight};
}

double eval_hermite(const std::array<double, 4>& coeffs, double t0, double tau,
                    double t, int deriv) {
  const double s = (t - t0) / tau;
  double acc = 0.0;
  for (int l = 0; l < 4; ++l) acc += coeffs[l] * Basis::eval(l, s, deriv);
  // d/dt = (1/tau) d/ds per derivative order
  for (int k = 0; k < deriv; ++k) acc /= tau;
  return acc;
}

namespace {

using Poly = std::array<Rational, 8>;  // dense monomial coefficients

Poly multiply(const std::array<Rational, 4>& a, const std::array<Rational, 4>& b) {
  Poly prod{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) prod[i + j] += a[i] * b[j];
  return prod;
}

Rational integrateUnit(const Poly& p) {
  Rational acc(0);
  for (int k = 0; k < 8; ++k) acc += p[k] / Rational(k + 1);
  return acc;
}

CouplingTable buildTable() {
  CouplingTable table;
  for (int i = 0; i < 4; ++i) {
    Poly unit{};
    const auto ci = Basis::coefficients(i);
    for (int k = 0; k < 4; ++k) unit[k] = ci[k];
    table.weight[i] = integrateUnit(unit);
    for (int j = 0; j < 4; ++j)
      table.mass[i][j] = integrateUnit(multiply(ci, Basis::coefficients(j)));
  }
  return table;
}

}  // namespace

const CouplingTable& coupling_table() {
  static const CouplingTable table = buildTable();
  return table;
}

}  // namespace gcflow::hermite
