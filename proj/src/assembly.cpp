#include "gcflow/assembly.hpp"

#include <algorithm>
#include <cassert>
#include <cinttypes>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace gcflow::assembly {

Coloring color_cells(const forms::Discretization& disc) {
  const auto& vspace = disc.pair.velocity;
  const int nCells = disc.mesh->numCells();

  std::vector<std::vector<int>> cellsOfDof(vspace.numDofs);
  for (int c = 0; c < nCells; ++c)
    for (int d : vspace.cellDofs[c]) cellsOfDof[d].push_back(c);

  std::vector<int> color(nCells, -1);
  int nColors = 0;
  std::vector<char> used;
  for (int c = 0; c < nCells; ++c) {
    used.assign(nColors + 1, 0);
    for (int d : vspace.cellDofs[c])
      for (int c2 : cellsOfDof[d])
        if (color[c2] >= 0) used[color[c2]] = 1;
    int pick = 0;
    while (used[pick]) ++pick;
    color[c] = pick;
    nColors = std::max(nColors, pick + 1);
  }

  Coloring out;
  out.cellsByColor.resize(nColors);
  for (int c = 0; c < nCells; ++c) out.cellsByColor[color[c]].push_back(c);
  out.facetsOfCell.resize(nCells);
  for (size_t k = 0; k < disc.dirichletFacets.size(); ++k)
    out.facetsOfCell[disc.dirichletFacets[k].cell].push_back(static_cast<int>(k));
  return out;
}

SystemAssembler::SystemAssembler(const forms::Discretization& disc)
    : disc_(&disc), coloring_(color_cells(disc)) {
  const int dim = disc.dim();
  std::vector<Eigen::Triplet<double>> triplets;
  size_t budget = 0;
  for (int c = 0; c < disc.mesh->numCells(); ++c) {
    const size_t L = disc.cellUnknowns(c).size();
    budget += L * L;
  }
  triplets.reserve(budget);
  for (int c = 0; c < disc.mesh->numCells(); ++c) {
    const auto dofs = disc.cellUnknowns(c);
    for (int i : dofs)
      for (int j : dofs) triplets.emplace_back(i, j, 0.0);
  }
  pattern_.resize(dim, dim);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();
}

namespace {

/// Accumulate into an existing entry of a compressed row-major matrix.
inline void addAt(SparseMatrix& S, int row, int col, double value) {
  const int* outer = S.outerIndexPtr();
  const int* inner = S.innerIndexPtr();
  const int* lo = inner + outer[row];
  const int* hi = inner + outer[row + 1];
  const int* pos = std::lower_bound(lo, hi, col);
  assert(pos != hi && *pos == col && "entry missing from assembly pattern");
  S.valuePtr()[pos - inner] += value;
}

void scatter(BlockSystem& out, const forms::LocalBlock& block) {
  const int L = static_cast<int>(block.dofs.size());
  for (int i = 0; i < L; ++i) {
    out.residual[block.dofs[i]] += block.residual[i];
    for (int j = 0; j < L; ++j)
      addAt(out.S, block.dofs[i], block.dofs[j], block.jacobian(i, j));
  }
}

}  // namespace

void SystemAssembler::assemble(const forms::ProblemData& data,
                               const forms::IntervalState& state, BlockSystem& out,
                               bool threaded) const {
  const auto& disc = *disc_;
  out.blockOffsets = disc.blockOffsets();
  out.S = pattern_;
  out.residual.setZero(disc.dim());

  unsigned hw = std::thread::hardware_concurrency();
  const int nThreads = threaded ? static_cast<int>(std::max(1u, std::min(hw, 16u))) : 1;

  for (const auto& cells : coloring_.cellsByColor) {
    auto work = [&](size_t begin, size_t end) {
      forms::LocalBlock block;
      for (size_t k = begin; k < end; ++k) {
        const int c = cells[k];
        forms::cell_block(disc, data, state, c, true, block);
        scatter(out, block);
        for (int fk : coloring_.facetsOfCell[c]) {
          forms::facet_block(disc, data, state, fk, true, block);
          scatter(out, block);
        }
      }
    };
    if (nThreads == 1 || cells.size() < 2 * static_cast<size_t>(nThreads)) {
      work(0, cells.size());
    } else {
      std::vector<std::thread> pool;
      const size_t chunk = (cells.size() + nThreads - 1) / nThreads;
      for (int t = 0; t < nThreads; ++t) {
        const size_t b = t * chunk;
        const size_t e = std::min(cells.size(), b + chunk);
        if (b >= e) break;
        pool.emplace_back(work, b, e);
      }
      for (auto& th : pool) th.join();
    }
  }
}

void condense(BlockSystem& system, const std::vector<int>& dofs) {
  if (dofs.empty()) return;
  std::vector<char> mask(system.S.rows(), 0);
  for (int d : dofs) {
    if (d < 0 || d >= static_cast<int>(mask.size()))
      throw std::invalid_argument("condense: constrained DoF " + std::to_string(d) +
                                  " outside system of dimension " + std::to_string(mask.size()));
    mask[d] = 1;
  }
  SparseMatrix& S = system.S;
  const int* outer = S.outerIndexPtr();
  const int* inner = S.innerIndexPtr();
  double* values = S.valuePtr();
  for (int row = 0; row < S.rows(); ++row) {
    const bool rowFixed = mask[row];
    for (int p = outer[row]; p < outer[row + 1]; ++p) {
      const int col = inner[p];
      if (rowFixed) {
        values[p] = col == row ? 1.0 : 0.0;
      } else if (mask[col]) {
        values[p] = 0.0;
      }
    }
    if (rowFixed) system.residual[row] = 0.0;
  }
}

namespace {

SparseMatrix extract_range(const SparseMatrix& S, int r0, int r1, int c0, int c1) {
  SparseMatrix out(r1 - r0, c1 - c0);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int row = r0; row < r1; ++row) {
    for (SparseMatrix::InnerIterator it(S, row); it; ++it) {
      if (it.col() >= c0 && it.col() < c1)
        triplets.emplace_back(row - r0, static_cast<int>(it.col()) - c0, it.value());
    }
  }
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

}  // namespace

SparseMatrix extract_block(const BlockSystem& system, int bi, int bj) {
  const auto& off = system.blockOffsets;
  return extract_range(system.S, off.at(bi), off.at(bi + 1), off.at(bj), off.at(bj + 1));
}

SaddleViews submatrix_views(const BlockSystem& system) {
  const auto& off = system.blockOffsets;
  if (off.size() != 5)
    throw std::invalid_argument("submatrix_views requires the four-block cubic-scheme layout");
  const int aEnd = off[2];  // end of the (v value, p value) pair
  const int n = off[4];
  SaddleViews out;
  out.S1 = extract_range(system.S, 0, aEnd, 0, aEnd);
  out.S2 = extract_range(system.S, 0, aEnd, aEnd, n);
  out.S3 = extract_range(system.S, aEnd, n, 0, aEnd);
  out.F4 = extract_range(system.S, off[2], off[3], off[2], off[3]);
  return out;
}

SparseMatrix assemble_pressure_mass(const forms::Discretization& disc) {
  const fem::FiniteElementSpace& pressure = disc.pair.pressure;
  const int nShape = pressure.element.numDofs();
  const int nq = static_cast<int>(disc.qwRef.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(disc.mesh->cells.size() * nShape * nShape);
  for (size_t c = 0; c < disc.mesh->cells.size(); ++c) {
    const auto& dofs = pressure.cellDofs[c];
    const auto& data = disc.cells[c];
    for (int i = 0; i < nShape; ++i)
      for (int j = 0; j < nShape; ++j) {
        double sum = 0.0;
        for (int q = 0; q < nq; ++q) sum += data.jxw[q] * disc.pShape[q][i] * disc.pShape[q][j];
        triplets.emplace_back(dofs[i], dofs[j], sum);
      }
  }
  SparseMatrix M(pressure.numDofs, pressure.numDofs);
  M.setFromTriplets(triplets.begin(), triplets.end());
  M.makeCompressed();
  return M;
}

void write_matrix_market(const SparseMatrix& S, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(fp, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(fp, "%ld %ld %ld\n", static_cast<long>(S.rows()),
               static_cast<long>(S.cols()), static_cast<long>(S.nonZeros()));
  for (int row = 0; row < S.rows(); ++row)
    for (SparseMatrix::InnerIterator it(S, row); it; ++it)
      std::fprintf(fp, "%d %ld %.17g\n", row + 1, static_cast<long>(it.col()) + 1,
                   it.value());
  std::fclose(fp);
}

SparseMatrix read_matrix_market(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "r");
  if (!fp) throw std::runtime_error("cannot open " + path);
  char line[256];
  if (!std::fgets(line, sizeof line, fp)) {
    std::fclose(fp);
    throw std::runtime_error("empty matrix file " + path);
  }
  if (std::string(line).find("MatrixMarket matrix coordinate real") == std::string::npos) {
    std::fclose(fp);
    throw std::runtime_error("unsupported matrix format in " + path);
  }
  long rows = 0, cols = 0, nnz = 0;
  do {
    if (!std::fgets(line, sizeof line, fp)) {
      std::fclose(fp);
      throw std::runtime_error("truncated matrix file " + path);
    }
  } while (line[0] == '%');
  if (std::sscanf(line, "%ld %ld %ld", &rows, &cols, &nnz) != 3) {
    std::fclose(fp);
    throw std::runtime_error("bad size line in " + path);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    if (std::fscanf(fp, "%ld %ld %lg", &i, &j, &v) != 3) {
      std::fclose(fp);
      throw std::runtime_error("truncated entries in " + path);
    }
    triplets.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
  }
  std::fclose(fp);
  SparseMatrix S(rows, cols);
  S.setFromTriplets(triplets.begin(), triplets.end());
  S.makeCompressed();
  return S;
}

}  // namespace gcflow::assembly
