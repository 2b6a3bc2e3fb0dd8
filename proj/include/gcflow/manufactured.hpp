#pragma once

#include <array>

#include "gcflow/mesh.hpp"

namespace gcflow::manufactured {

/// Closed-form unsteady flow on the unit square used by the convergence
/// studies: divergence-free velocity with zero boundary trace, zero-mean
/// pressure, and the body force that makes the triple satisfy the momentum
/// equation for the given viscosity.
std::array<double, 2> velocity(const mesh::Point& x, double t);
std::array<double, 2> velocity_rate(const mesh::Point& x, double t);
double pressure(const mesh::Point& x, double t);
double pressure_rate(const mesh::Point& x, double t);
std::array<double, 2> force(const mesh::Point& x, double t, double nu);
std::array<double, 2> force_rate(const mesh::Point& x, double t, double nu);

/// Spatial gradient, entry [i][d] = d v_i / d x_d.
std::array<std::array<double, 2>, 2> velocity_gradient(const mesh::Point& x, double t);

}  // namespace gcflow::manufactured
