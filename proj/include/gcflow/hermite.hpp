#pragma once

/// Cubic Hermite machinery for the C1-in-time Galerkin-collocation scheme:
/// the value/derivative basis on the unit interval, the two-point
/// Hermite-type quadrature rule, Hermite data interpolation, and the exact
/// temporal coupling tables.

#include <array>
#include <boost/rational.hpp>

namespace gcflow::hermite {

using Rational = boost::rational<long long>;

/// Cubic value/derivative basis on [0,1].  Slot semantics over an interval
/// (t0, t0+tau]: slot 0/1 carry value and tau-scaled derivative at the left
/// end, slot 2/3 value and tau-scaled derivative at the right end, so that
/// g(t) = sum_l g_l * basis_l((t-t0)/tau) with g_1 = tau*g'(t0), g_3 = tau*g'(t1).
struct Basis {
  /// Monomial coefficients (c0 + c1*s + c2*s^2 + c3*s^3) of basis function l.
  static std::array<Rational, 4> coefficients(int l);

  /// Value of basis l at s in [0,1]; deriv selects d/ds order 0..3.
  static double eval(int l, double s, int deriv = 0);
};

/// Two-point quadrature with endpoint-derivative corrections on [-1,1]:
///   Q(g) = wLeft*g'(-1) + g(-1) + g(1) + wRight*g'(1),
/// exact for polynomials of degree <= 3.
struct QuadratureRule {
  double wLeft;
  double wRight;
  std::array<double, 2> nodes;        // {-1, 1}
  std::array<double, 2> nodeWeights;  // {1, 1}

  /// Apply on [-1,1] given endpoint values and derivatives.
  double applyReference(double gl, double gr, double dgl, double dgr) const;

  /// Apply on [a,b]; derivative terms pick up ((b-a)/2)^2, value terms (b-a)/2.
  double applyMapped(double a, double b, double ga, double gb, double dga,
                     double dgb) const;
};

QuadratureRule hermite_quadrature_k3();

/// Hermite interpolation coefficients of a scalar function on [t0, t0+tau]
/// from endpoint values/derivatives: {g(t0), tau*g'(t0), g(t1), tau*g'(t1)}.
std::array<double, 4> hermite_interpolate(double valueLeft, double derivLeft,
                                          double valueRight, double derivRight,
                                          double tau);

/// Evaluate a Hermite coefficient quadruple at time t in [t0, t0+tau];
/// deriv selects d/dt order (chain rule in 1/tau applied).
double eval_hermite(const std::array<double, 4>& coeffs, double t0, double tau,
                    double t, int deriv = 0);

/// Exact temporal coupling tables:
///   mass[i][j] = int_0^1 basis_i * basis_j,   weight[l] = int_0^1 basis_l.
struct CouplingTable {
  std::array<std::array<Rational, 4>, 4> mass;
  std::array<Rational, 4> weight;

  double massD(int i, int j) const { return boost::rational_cast<double>(mass[i][j]); }
  double weightD(int l) const { return boost::rational_cast<double>(weight[l]); }
};

/// Computed by exact rational integration of the basis products.
const CouplingTable& coupling_table();

}  // namespace gcflow::hermite
