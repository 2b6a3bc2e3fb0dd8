#pragma once

/// Sparse assembly of the interval systems: CSR pattern built once per
/// discretization, conflict-free cell coloring for deterministic parallel
/// scatter, Dirichlet condensation, block extraction, and Matrix Market
/// export.

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "gcflow/forms.hpp"

namespace gcflow::assembly {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Conflict-free cell coloring: cells of equal color share no global unknown.
/// Boundary facets scatter together with their owner cell, so they inherit
/// its color implicitly.
struct Coloring {
  std::vector<std::vector<int>> cellsByColor;
  std::vector<std::vector<int>> facetsOfCell;  ///< dirichletFacets indices per cell
};
Coloring color_cells(const forms::Discretization& disc);

/// Assembled interval system: Jacobian S, residual, and the unknown-block
/// start offsets (trailing entry = total dimension).
struct BlockSystem {
  SparseMatrix S;
  Eigen::VectorXd residual;
  std::vector<int> blockOffsets;
};

/// Assembler reusing one sparsity pattern across Newton iterations and time
/// steps.  Entries accumulate color by color, and within a color per cell in
/// list order, so repeated assembly is bitwise reproducible whether threaded
/// or serial.
class SystemAssembler {
 public:
  explicit SystemAssembler(const forms::Discretization& disc);

  void assemble(const forms::ProblemData& data, const forms::IntervalState& state,
                BlockSystem& out, bool threaded = true) const;

  const Coloring& coloring() const { return coloring_; }
  const SparseMatrix& pattern() const { return pattern_; }

 private:
  const forms::Discretization* disc_;
  Coloring coloring_;
  SparseMatrix pattern_;  ///< structural template holding zeros
};

/// Turn the listed unknowns into trivial equations: their rows and columns
/// are zeroed, the diagonal set to one, and their residual entries cleared,
/// so the Newton update leaves them untouched.
void condense(BlockSystem& system, const std::vector<int>& dofs);

/// Copy of one block (bi, bj) of the system matrix.
SparseMatrix extract_block(const BlockSystem& system, int bi, int bj);

/// The three mixed saddle views of the cubic-scheme system plus the
/// endpoint-derivative mass block F4.  Grouping rows/columns into the value
/// pair a = (v value, p value) and the derivative pair b = (v deriv, p deriv):
/// S1 = (a, a), S2 = (a, b), S3 = (b, a), and F4 is the (v deriv, v deriv)
/// diagonal; the remaining derivative-pair diagonal entries are structural
/// zeros, so S is reassembled exactly from {S1, S2, S3, F4}.
struct SaddleViews {
  SparseMatrix S1, S2, S3;  ///< each (2J+M) x (2J+M)
  SparseMatrix F4;          ///< 2J x 2J
};
/// Throws std::invalid_argument for the two-block (linear-scheme) layout.
SaddleViews submatrix_views(const BlockSystem& system);

/// Pressure-space mass matrix (M x M), assembled serially.
SparseMatrix assemble_pressure_mass(const forms::Discretization& disc);

/// Matrix Market coordinate-format export/import (general real, full
/// precision round-trip).
void write_matrix_market(const SparseMatrix& S, const std::string& path);
SparseMatrix read_matrix_market(const std::string& path);

}  // namespace gcflow::assembly
