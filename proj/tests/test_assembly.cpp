#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>
#include <set>

#include "gcflow/assembly.hpp"
#include "gcflow/forms.hpp"
#include "gcflow/mesh.hpp"

using namespace gcflow;
using assembly::BlockSystem;
using assembly::SystemAssembler;
using forms::BcMode;
using forms::Discretization;
using forms::IntervalState;
using forms::ProblemData;
using forms::Scheme;

namespace {

IntervalState randomState(const Discretization& disc, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  const int J2 = disc.velocityDofs(), M = disc.pressureDofs();
  IntervalState s;
  s.t0 = 0.1;
  s.tau = 0.2;
  auto fill = [&](Eigen::VectorXd& v, int n) {
    v.resize(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  };
  fill(s.v0, J2);
  fill(s.v2, J2);
  fill(s.p0, M);
  fill(s.p2, M);
  if (disc.scheme == Scheme::Gcc13) {
    fill(s.v1, J2);
    fill(s.v3, J2);
    fill(s.p1, M);
    fill(s.p3, M);
  }
  return s;
}

ProblemData someData() {
  ProblemData data;
  data.nu = 0.45;
  data.f = [](const mesh::Point& x, double t) {
    return std::array<double, 2>{x[0] + t, x[1] - t};
  };
  data.df = [](const mesh::Point&, double) { return std::array<double, 2>{1.0, -1.0}; };
  data.g = [](const mesh::Point& x, double t) {
    return std::array<double, 2>{0.1 * t * x[1], 0.0};
  };
  data.dg = [](const mesh::Point& x, double) {
    return std::array<double, 2>{0.1 * x[1], 0.0};
  };
  return data;
}

}  // namespace

TEST_CASE("coloring: same-color cells share no unknowns, all cells colored") {
  const auto m = mesh::generate_channel_cylinder({}, 0);
  Discretization disc(m, 2, Scheme::Gcc13, BcMode::Nitsche);
  const auto coloring = assembly::color_cells(disc);

  int total = 0;
  for (const auto& cells : coloring.cellsByColor) {
    total += static_cast<int>(cells.size());
    std::set<int> seen;
    for (int c : cells) {
      for (int u : disc.cellUnknowns(c)) {
        CHECK(seen.count(u) == 0);
        seen.insert(u);
      }
    }
  }
  CHECK(total == m.numCells());
  // a quad mesh needs at least 4 colors (vertex-sharing neighbours)
  CHECK(coloring.cellsByColor.size() >= 4);
  CHECK(coloring.cellsByColor.size() <= 16);

  size_t facets = 0;
  for (int c = 0; c < m.numCells(); ++c) {
    for (int fk : coloring.facetsOfCell[c]) {
      CHECK(disc.dirichletFacets[static_cast<size_t>(fk)].cell == c);
      ++facets;
    }
  }
  CHECK(facets == disc.dirichletFacets.size());
}

TEST_CASE("sparse assembly agrees with the dense reference") {
  const auto m = mesh::generate_unit_square(2);
  for (auto scheme : {Scheme::Gcc13, Scheme::Cgp1}) {
    Discretization disc(m, 2, scheme, BcMode::Nitsche);
    const auto data = someData();
    const auto state = randomState(disc, 21);
    SystemAssembler assembler(disc);
    BlockSystem sys;
    assembler.assemble(data, state, sys);

    const Eigen::MatrixXd dense = forms::assemble_dense_jacobian(disc, data, state);
    const Eigen::VectorXd r = forms::assemble_residual(disc, data, state);
    const double scale = dense.cwiseAbs().maxCoeff();
    CHECK((Eigen::MatrixXd(sys.S) - dense).cwiseAbs().maxCoeff() < 1e-13 * scale);
    CHECK((sys.residual - r).lpNorm<Eigen::Infinity>() <
          1e-13 * std::max(1.0, r.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("threaded assembly is bitwise identical to serial") {
  const auto m = mesh::generate_channel_cylinder({}, 0);
  Discretization disc(m, 2, Scheme::Gcc13, BcMode::Nitsche);
  const auto data = someData();
  const auto state = randomState(disc, 5);
  SystemAssembler assembler(disc);
  BlockSystem serial, threaded;
  assembler.assemble(data, state, serial, /*threaded=*/false);
  assembler.assemble(data, state, threaded, /*threaded=*/true);
  REQUIRE(serial.S.nonZeros() == threaded.S.nonZeros());
  const double* a = serial.S.valuePtr();
  const double* b = threaded.S.valuePtr();
  bool identical = true;
  for (long k = 0; k < serial.S.nonZeros(); ++k) identical = identical && a[k] == b[k];
  CHECK(identical);
  CHECK((serial.residual - threaded.residual).lpNorm<Eigen::Infinity>() == 0.0);

  // repeated assembly reproduces the exact same values
  BlockSystem again;
  assembler.assemble(data, state, again, /*threaded=*/true);
  const double* c = again.S.valuePtr();
  bool stable = true;
  for (long k = 0; k < serial.S.nonZeros(); ++k) stable = stable && b[k] == c[k];
  CHECK(stable);
}

TEST_CASE("structurally zero blocks assemble to zero values") {
  const auto m = mesh::generate_unit_square(2);
  Discretization disc(m, 2, Scheme::Gcc13, BcMode::Nitsche);
  SystemAssembler assembler(disc);
  BlockSystem sys;
  assembler.assemble(someData(), randomState(disc, 8), sys);
  for (auto [bi, bj] : {std::pair{1, 1}, {1, 3}, {2, 3}, {3, 1}, {3, 2}, {3, 3}}) {
    const auto block = assembly::extract_block(sys, bi, bj);
    CHECK(block.coeffs().cwiseAbs().maxCoeff() == 0.0);
  }
  // extract_block returns the right shapes
  const auto off = sys.blockOffsets;
  const auto b01 = assembly::extract_block(sys, 0, 1);
  CHECK(b01.rows() == off[1] - off[0]);
  CHECK(b01.cols() == off[2] - off[1]);
  CHECK(b01.nonZeros() > 0);
}

TEST_CASE("condensation rewrites rows and columns to identity") {
  const auto m = mesh::generate_unit_square(2);
  Discretization disc(m, 2, Scheme::Gcc13, BcMode::Strong);
  SystemAssembler assembler(disc);
  BlockSystem sys;
  assembler.assemble(someData(), randomState(disc, 13), sys);

  std::vector<int> fixed = {0, 5, sys.blockOffsets[1], sys.blockOffsets[3] + 2};
  assembly::condense(sys, fixed);
  std::set<int> fixedSet(fixed.begin(), fixed.end());
  for (int d : fixed) {
    CHECK(sys.residual[d] == 0.0);
    for (assembly::SparseMatrix::InnerIterator it(sys.S, d); it; ++it)
      CHECK(it.value() == (it.col() == d ? 1.0 : 0.0));
  }
  for (int row = 0; row < sys.S.rows(); ++row) {
    if (fixedSet.count(row)) continue;
    for (assembly::SparseMatrix::InnerIterator it(sys.S, row); it; ++it)
      if (fixedSet.count(static_cast<int>(it.col()))) CHECK(it.value() == 0.0);
  }
}

TEST_CASE("matrix market round-trip preserves every entry") {
  const auto m = mesh::generate_unit_square(1);
  Discretization disc(m, 2, Scheme::Cgp1, BcMode::Nitsche);
  SystemAssembler assembler(disc);
  BlockSystem sys;
  assembler.assemble(someData(), randomState(disc, 2), sys);

  const std::string path = "/tmp/gcflow_test_mm.mtx";
  assembly::write_matrix_market(sys.S, path);
  const auto back = assembly::read_matrix_market(path);
  REQUIRE(back.rows() == sys.S.rows());
  REQUIRE(back.cols() == sys.S.cols());
  const Eigen::MatrixXd diff = Eigen::MatrixXd(back) - Eigen::MatrixXd(sys.S);
  CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());

  CHECK_THROWS(assembly::read_matrix_market("/tmp/gcflow_no_such_file.mtx"));
}

TEST_CASE("saddle views: dimensions, zero pressure corner, exact reassembly") {
  const auto m = mesh::generate_unit_square(2);
  Discretization disc(m, 4, Scheme::Gcc13, BcMode::Nitsche);
  SystemAssembler assembler(disc);
  BlockSystem sys;
  assembler.assemble(someData(), randomState(disc, 21), sys);

  const int J2 = disc.velocityDofs(), M = disc.pressureDofs();
  const auto views = assembly::submatrix_views(sys);
  CHECK(views.S1.rows() == J2 + M);
  CHECK(views.S1.cols() == J2 + M);
  CHECK(views.S2.rows() == J2 + M);
  CHECK(views.S2.cols() == J2 + M);
  CHECK(views.S3.rows() == J2 + M);
  CHECK(views.S3.cols() == J2 + M);
  CHECK(views.F4.rows() == J2);
  CHECK(views.F4.cols() == J2);

  // the pressure-pressure corner of the value-pair saddle is structurally zero
  const Eigen::MatrixXd S1 = Eigen::MatrixXd(views.S1);
  CHECK(S1.block(J2, J2, M, M).cwiseAbs().maxCoeff() == 0.0);

  // placing the four views back at their offsets reproduces the system exactly
  const int n = sys.blockOffsets.back();
  Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(n, n);
  rebuilt.block(0, 0, J2 + M, J2 + M) = S1;
  rebuilt.block(0, J2 + M, J2 + M, J2 + M) = Eigen::MatrixXd(views.S2);
  rebuilt.block(J2 + M, 0, J2 + M, J2 + M) = Eigen::MatrixXd(views.S3);
  rebuilt.block(J2 + M, J2 + M, J2, J2) = Eigen::MatrixXd(views.F4);
  const Eigen::MatrixXd diff = rebuilt - Eigen::MatrixXd(sys.S);
  CHECK(diff.cwiseAbs().maxCoeff() == 0.0);

  // a vector supported in the derivative-pressure block maps into value-velocity rows only
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = sys.blockOffsets[3]; i < sys.blockOffsets[4]; ++i) e[i] = gauss(rng);
  const Eigen::VectorXd y = sys.S * e;
  CHECK(y.head(J2).cwiseAbs().maxCoeff() > 0.0);
  CHECK(y.segment(J2, M).cwiseAbs().maxCoeff() == 0.0);
  CHECK(y.tail(J2 + M).cwiseAbs().maxCoeff() == 0.0);

  Discretization lin(m, 2, Scheme::Cgp1, BcMode::Nitsche);
  SystemAssembler linAssembler(lin);
  BlockSystem linSys;
  linAssembler.assemble(someData(), randomState(lin, 22), linSys);
  CHECK_THROWS_AS(assembly::submatrix_views(linSys), std::invalid_argument);
}

TEST_CASE("derivative-pair coupling blocks are exact negative transposes without facet terms") {
  const auto m = mesh::generate_unit_square(2);
  Discretization disc(m, 3, Scheme::Gcc13, BcMode::Strong);
  SystemAssembler assembler(disc);
  BlockSystem sys;
  assembler.assemble(someData(), randomState(disc, 31), sys);

  const Eigen::MatrixXd G = Eigen::MatrixXd(assembly::extract_block(sys, 2, 1));
  const Eigen::MatrixXd D = Eigen::MatrixXd(assembly::extract_block(sys, 3, 0));
  CHECK((G + D.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(G.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("condensing a non-existent dof is an argument error") {
  const auto m = mesh::generate_unit_square(1);
  Discretization disc(m, 2, Scheme::Cgp1, BcMode::Nitsche);
  SystemAssembler assembler(disc);
  BlockSystem sys;
  assembler.assemble(someData(), randomState(disc, 5), sys);
  std::vector<int> bad = {0, sys.blockOffsets.back()};
  CHECK_THROWS_AS(assembly::condense(sys, bad), std::invalid_argument);
  std::vector<int> negative = {-1};
  CHECK_THROWS_AS(assembly::condense(sys, negative), std::invalid_argument);
}

TEST_CASE("pressure mass matrix is symmetric positive with total mass = area") {
  const auto m = mesh::generate_unit_square(2);
  Discretization disc(m, 3, Scheme::Gcc13, BcMode::Nitsche);
  const auto Mp = assembly::assemble_pressure_mass(disc);
  REQUIRE(Mp.rows() == disc.pressureDofs());
  REQUIRE(Mp.cols() == disc.pressureDofs());
  const Eigen::MatrixXd Md = Eigen::MatrixXd(Mp);
  CHECK((Md - Md.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  // ones' quadratic form integrates 1 over the unit square
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Mp.rows());
  CHECK(ones.dot(Md * ones) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Md + Md.transpose()));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}
