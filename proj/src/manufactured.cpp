#include "gcflow/manufactured.hpp"

#include <cmath>

namespace gcflow::manufactured {

namespace {

void manufactured_eval(double x, double y, double t, double nu, double out[14]) {
#include "manufactured_gen.inc"
}

}  // namespace

std::array<double, 2> velocity(const mesh::Point& x, double t) {
  double out[14];
  manufactured_eval(x[0], x[1], t, 1.0, out);
  return {out[0], out[1]};
}

std::array<double, 2> velocity_rate(const mesh::Point& x, double t) {
  double out[14];
  manufactured_eval(x[0], x[1], t, 1.0, out);
  return {out[2], out[3]};
}

double pressure(const mesh::Point& x, double t) {
  double out[14];
  manufactured_eval(x[0], x[1], t, 1.0, out);
  return out[4];
}

double pressure_rate(const mesh::Point& x, double t) {
  double out[14];
  manufactured_eval(x[0], x[1], t, 1.0, out);
  return out[5];
}

std::array<double, 2> force(const mesh::Point& x, double t, double nu) {
  double out[14];
  manufactured_eval(x[0], x[1], t, nu, out);
  return {out[6], out[7]};
}

std::array<double, 2> force_rate(const mesh::Point& x, double t, double nu) {
  double out[14];
  manufactured_eval(x[0], x[1], t, nu, out);
  return {out[8], out[9]};
}

std::array<std::array<double, 2>, 2> velocity_gradient(const mesh::Point& x, double t) {
  double out[14];
  manufactured_eval(x[0], x[1], t, 1.0, out);
  return {{{out[10], out[11]}, {out[12], out[13]}}};
}

}  // namespace gcflow::manufactured
