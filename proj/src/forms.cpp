#include "gcflow/forms.hpp"

#include <cmath>
#include <stdexcept>

#include "gcflow/hermite.hpp"

namespace gcflow::forms {

const char* scheme_name(Scheme s) { return s == Scheme::Gcc13 ? "gcc13" : "cgp1"; }

Scheme scheme_from_name(std::string_view name) {
  if (name == "gcc13") return Scheme::Gcc13;
  if (name == "cgp1") return Scheme::Cgp1;
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

const char* bc_name(BcMode mode) { return mode == BcMode::Strong ? "strong" : "nitsche"; }

BcMode bc_from_name(std::string_view name) {
  if (name == "strong") return BcMode::Strong;
  if (name == "nitsche") return BcMode::Nitsche;
  throw std::invalid_argument("unknown boundary mode: " + std::string(name));
}

Discretization::Discretization(const mesh::Mesh& m, int velocityDegree, Scheme s,
                               BcMode bc, NitscheParams np)
    : mesh(&m), pair(m, velocityDegree), scheme(s), bcMode(bc), nitsche(np) {
  const int r = velocityDegree;
  nq1 = r + 2;  // exact for the convective trilinear term through r = 4
  const auto rule = fem::gauss_legendre(nq1);
  const int nq = nq1 * nq1;

  const auto& velEl = pair.velocity.element;
  const auto& prEl = pair.pressure.element;
  const int N = velEl.numDofs(), P = prEl.numDofs();

  qwRef.resize(nq);
  vShape.assign(nq, std::vector<double>(N));
  pShape.assign(nq, std::vector<double>(P));
  std::vector<std::array<double, 2>> vRefGrad(nq * N);
  std::vector<Point> refPts(nq);
  for (int j = 0; j < nq1; ++j) {
    for (int i = 0; i < nq1; ++i) {
      const int q = i + nq1 * j;
      refPts[q] = {rule.points[i], rule.points[j]};
      qwRef[q] = rule.weights[i] * rule.weights[j];
      for (int a = 0; a < N; ++a) {
        vShape[q][a] = velEl.shapeValue(a, refPts[q][0], refPts[q][1]);
        vRefGrad[q * N + a] = velEl.shapeGrad(a, refPts[q][0], refPts[q][1]);
      }
      for (int b = 0; b < P; ++b)
        pShape[q][b] = prEl.shapeValue(b, refPts[q][0], refPts[q][1]);
    }
  }

  cells.resize(m.numCells());
  for (int c = 0; c < m.numCells(); ++c) {
    const auto geom = fem::cell_geometry(m, c);
    auto& cd = cells[c];
    cd.jxw.resize(nq);
    cd.xq.resize(nq);
    cd.vGrad.assign(nq, std::vector<std::array<double, 2>>(N));
    for (int q = 0; q < nq; ++q) {
      const Eigen::Matrix2d J = geom.jacobian(refPts[q][0], refPts[q][1]);
      const double detJ = J.determinant();
      if (detJ <= 0.0) throw std::runtime_error("degenerate cell in discretization");
      cd.jxw[q] = detJ * qwRef[q];
      cd.xq[q] = geom.map(refPts[q][0], refPts[q][1]);
      const Eigen::Matrix2d Jinv = J.inverse();
      for (int a = 0; a < N; ++a) {
        const auto& g = vRefGrad[q * N + a];
        cd.vGrad[q][a] = {Jinv(0, 0) * g[0] + Jinv(1, 0) * g[1],
                          Jinv(0, 1) * g[0] + Jinv(1, 1) * g[1]};
      }
    }
  }

  if (bcMode != BcMode::Nitsche) return;

  const auto rule1 = fem::gauss_legendre(r + 2);
  for (size_t fi = 0; fi < m.facets.size(); ++fi) {
    const auto& facet = m.facets[fi];
    if (facet.marker == mesh::FacetMarker::Outflow) continue;  // do-nothing
    FacetData fd;
    fd.facet = static_cast<int>(fi);
    fd.cell = facet.cell;
    fd.h = m.cellDiameter(facet.cell);
    fd.normal = m.facetNormal(facet);
    const auto ends = m.facetNodes(facet);
    const auto& pa = m.nodes[ends[0]];
    const auto& pb = m.nodes[ends[1]];
    const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
    const auto geom = fem::cell_geometry(m, facet.cell);
    const int nk = static_cast<int>(rule1.points.size());
    fd.w.resize(nk);
    fd.xq.resize(nk);
    fd.vVal.assign(nk, std::vector<double>(N));
    fd.pVal.assign(nk, std::vector<double>(P));
    fd.vGrad.assign(nk, std::vector<std::array<double, 2>>(N));
    for (int k = 0; k < nk; ++k) {
      const double sq = rule1.points[k];
      // reference trace of local edge e, running corner e -> corner e+1
      Point ref;
      switch (facet.localEdge) {
        case 0: ref = {sq, 0.0}; break;
        case 1: ref = {1.0, sq}; break;
        case 2: ref = {1.0 - sq, 1.0}; break;
        default: ref = {0.0, 1.0 - sq}; break;
      }
      fd.w[k] = rule1.weights[k] * len;
      fd.xq[k] = geom.map(ref[0], ref[1]);
      const Eigen::Matrix2d Jinv = geom.jacobian(ref[0], ref[1]).inverse();
      for (int a = 0; a < N; ++a) {
        fd.vVal[k][a] = velEl.shapeValue(a, ref[0], ref[1]);
        const auto g = velEl.shapeGrad(a, ref[0], ref[1]);
        fd.vGrad[k][a] = {Jinv(0, 0) * g[0] + Jinv(1, 0) * g[1],
                          Jinv(0, 1) * g[0] + Jinv(1, 1) * g[1]};
      }
      for (int b = 0; b < P; ++b) fd.pVal[k][b] = prEl.shapeValue(b, ref[0], ref[1]);
    }
    dirichletFacets.push_back(std::move(fd));
  }
}

std::vector<int> Discretization::blockOffsets() const {
  const int J2 = velocityDofs(), M = pressureDofs();
  if (scheme == Scheme::Gcc13) return {0, J2, J2 + M, 2 * J2 + M, 2 * J2 + 2 * M};
  return {0, J2, J2 + M};
}

namespace {

/// Global unknown ids for the scalar dof lists of one cell or facet.
std::vector<int> unknownsFor(const Discretization& disc, const std::vector<int>& vdofs,
                             const std::vector<int>& pdofs) {
  const auto off = disc.blockOffsets();
  const int nGroups = disc.scheme == Scheme::Gcc13 ? 2 : 1;
  const int nV = static_cast<int>(vdofs.size()), nP = static_cast<int>(pdofs.size());
  std::vector<int> dofs;
  dofs.reserve(nGroups * (2 * nV + nP));
  for (int g = 0; g < nGroups; ++g) {
    for (int a = 0; a < nV; ++a)
      for (int c = 0; c < 2; ++c)
        dofs.push_back(off[2 * g] + fem::TaylorHoodPair::vdof(vdofs[a], c));
    for (int b = 0; b < nP; ++b) dofs.push_back(off[2 * g + 1] + pdofs[b]);
  }
  return dofs;
}

std::array<double, 2> evalField(const TimeField& f, const Point& x, double t) {
  if (!f) return {0.0, 0.0};
  return f(x, t);
}

/// Slot coefficients {g(t0), tau g'(t0), g(t1), tau g'(t1)} of a data field.
std::array<std::array<double, 2>, 4> slotCoefficients(const TimeField& f,
                                                      const TimeField& df,
                                                      const Point& x, double t0,
                                                      double tau) {
  const auto f0 = evalField(f, x, t0);
  const auto d0 = evalField(df, x, t0);
  const auto f1 = evalField(f, x, t0 + tau);
  const auto d1 = evalField(df, x, t0 + tau);
  std::array<std::array<double, 2>, 4> out;
  out[0] = f0;
  out[1] = {tau * d0[0], tau * d0[1]};
  out[2] = f1;
  out[3] = {tau * d1[0], tau * d1[1]};
  return out;
}

struct SlotFields {
  // per slot l: velocity value, velocity gradient [c][d], pressure, divergence
  double val[4][2]{};
  double grad[4][2][2]{};
  double pv[4]{};
  double div[4]{};
};

/// Local coefficient gather: vloc[l][a][c], ploc[l][b] for the slots in use.
struct LocalCoefficients {
  std::vector<std::array<double, 2>> v[4];
  std::vector<double> p[4];

  LocalCoefficients(const Discretization& disc, const IntervalState& s, int cell) {
    const auto& vdofs = disc.pair.velocity.cellDofs[cell];
    const auto& pdofs = disc.pair.pressure.cellDofs[cell];
    const Eigen::VectorXd* vs[4] = {&s.v0, &s.v1, &s.v2, &s.v3};
    const Eigen::VectorXd* ps[4] = {&s.p0, &s.p1, &s.p2, &s.p3};
    for (int l = 0; l < 4; ++l) {
      if (disc.scheme == Scheme::Cgp1 && (l == 1 || l == 3)) continue;
      v[l].resize(vdofs.size());
      p[l].resize(pdofs.size());
      for (size_t a = 0; a < vdofs.size(); ++a)
        v[l][a] = {(*vs[l])[2 * vdofs[a]], (*vs[l])[2 * vdofs[a] + 1]};
      for (size_t b = 0; b < pdofs.size(); ++b) p[l][b] = (*ps[l])[pdofs[b]];
    }
  }

  SlotFields fieldsAt(const Discretization& disc, const std::vector<double>& vVal,
                      const std::vector<std::array<double, 2>>& vGrad,
                      const std::vector<double>& pVal) const {
    SlotFields f;
    for (int l = 0; l < 4; ++l) {
      if (disc.scheme == Scheme::Cgp1 && (l == 1 || l == 3)) continue;
      for (size_t a = 0; a < v[l].size(); ++a) {
        for (int c = 0; c < 2; ++c) {
          f.val[l][c] += v[l][a][c] * vVal[a];
          f.grad[l][c][0] += v[l][a][c] * vGrad[a][0];
          f.grad[l][c][1] += v[l][a][c] * vGrad[a][1];
        }
      }
      for (size_t b = 0; b < p[l].size(); ++b) f.pv[l] += p[l][b] * pVal[b];
      f.div[l] = f.grad[l][0][0] + f.grad[l][1][1];
    }
    return f;
  }
};

struct CouplingWeights {
  double m[4][4];
  double s[4];
  CouplingWeights() {
    const auto& table = hermite::coupling_table();
    for (int i = 0; i < 4; ++i) {
      s[i] = table.weightD(i);
      for (int j = 0; j < 4; ++j) m[i][j] = table.massD(i, j);
    }
  }
};

const CouplingWeights& weights() {
  static const CouplingWeights w;
  return w;
}

constexpr double kGauss2[2] = {0.5 - 0.5 / 1.7320508075688772,
                               0.5 + 0.5 / 1.7320508075688772};

}  // namespace

std::vector<int> Discretization::cellUnknowns(int cell) const {
  return unknownsFor(*this, pair.velocity.cellDofs[cell], pair.pressure.cellDofs[cell]);
}

std::vector<int> Discretization::facetUnknowns(int dirichletFacet) const {
  const auto& fd = dirichletFacets.at(dirichletFacet);
  return unknownsFor(*this, pair.velocity.cellDofs[fd.cell],
                     pair.pressure.cellDofs[fd.cell]);
}

void cell_block(const Discretization& disc, const ProblemData& data,
                const IntervalState& state, int cell, bool wantJacobian,
                LocalBlock& out) {
  const int N = disc.pair.velocity.element.numDofs();
  const int P = disc.pair.pressure.element.numDofs();
  const bool cubic = disc.scheme == Scheme::Gcc13;
  const int L = cubic ? 2 * (2 * N + P) : 2 * N + P;
  out.dofs = disc.cellUnknowns(cell);
  out.residual.setZero(L);
  if (wantJacobian) out.jacobian.setZero(L, L);

  const LocalCoefficients loc(disc, state, cell);
  const auto& cd = disc.cells[cell];
  const double tau = state.tau, t0 = state.t0, nu = data.nu;
  const auto& W = weights();

  // local index helpers; unknown groups follow cellUnknowns layout
  const int oP2 = 2 * N, oV3 = 2 * N + P, oP3 = 2 * (2 * N) + P;
  auto iV2 = [](int a, int c) { return 2 * a + c; };
  auto iP2 = [oP2](int b) { return oP2 + b; };
  auto iV3 = [oV3](int a, int c) { return oV3 + 2 * a + c; };
  auto iP3 = [oP3](int b) { return oP3 + b; };

  const int nq = static_cast<int>(cd.jxw.size());
  for (int q = 0; q < nq; ++q) {
    const auto& Nv = disc.vShape[q];
    const auto& Np = disc.pShape[q];
    const auto& dNv = cd.vGrad[q];
    const double jxw = cd.jxw[q];
    const auto f = loc.fieldsAt(disc, Nv, dNv, Np);

    if (cubic) {
      const auto fc = slotCoefficients(data.f, data.df, cd.xq[q], t0, tau);
      // mass-coupled convection fields: wv[i] = sum_j m_ij v_j and gradients
      double wv[4][2]{}, wg[4][2][2]{};
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          const double mij = W.m[i][j];
          for (int c = 0; c < 2; ++c) {
            wv[i][c] += mij * f.val[j][c];
            wg[i][c][0] += mij * f.grad[j][c][0];
            wg[i][c][1] += mij * f.grad[j][c][1];
          }
        }
      }
      // s-weighted sums
      double sGrad[2][2]{}, sP = 0.0, sF[2]{}, sDiv = 0.0;
      for (int l = 0; l < 4; ++l) {
        sP += W.s[l] * f.pv[l];
        sDiv += W.s[l] * f.div[l];
        for (int c = 0; c < 2; ++c) {
          sF[c] += W.s[l] * fc[l][c];
          sGrad[c][0] += W.s[l] * f.grad[l][c][0];
          sGrad[c][1] += W.s[l] * f.grad[l][c][1];
        }
      }
      // convection residual: sum_ij m_ij (grad v_i) v_j = sum_i (grad v_i) wv[i]
      double conv[2]{};
      for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 2; ++c)
          conv[c] += f.grad[i][c][0] * wv[i][0] + f.grad[i][c][1] * wv[i][1];

      for (int a = 0; a < N; ++a) {
        const double Na = Nv[a];
        const auto& dNa = dNv[a];
        for (int c = 0; c < 2; ++c) {
          // variational momentum rows
          out.residual[iV2(a, c)] +=
              jxw * ((f.val[2][c] - f.val[0][c]) * Na + tau * conv[c] * Na +
                     tau * nu * (sGrad[c][0] * dNa[0] + sGrad[c][1] * dNa[1]) -
                     tau * sP * dNa[c] - tau * sF[c] * Na);
          // collocation momentum rows at the right endpoint
          const double conv2c =
              f.grad[2][c][0] * f.val[2][0] + f.grad[2][c][1] * f.val[2][1];
          out.residual[iV3(a, c)] +=
              jxw * (f.val[3][c] * Na / tau + conv2c * Na +
                     nu * (f.grad[2][c][0] * dNa[0] + f.grad[2][c][1] * dNa[1]) -
                     f.pv[2] * dNa[c] - fc[2][c] * Na);
        }
      }
      for (int b = 0; b < P; ++b) {
        out.residual[iP2(b)] += jxw * tau * sDiv * Np[b];
        out.residual[iP3(b)] += jxw * f.div[2] * Np[b];
      }

      if (wantJacobian) {
        const double s2 = W.s[2], s3 = W.s[3];  // 1/2 and -1/12
        for (int a = 0; a < N; ++a) {
          const double Na = Nv[a];
          const auto& dNa = dNv[a];
          for (int b = 0; b < N; ++b) {
            const double Nb = Nv[b];
            const auto& dNb = dNv[b];
            const double lap = dNa[0] * dNb[0] + dNa[1] * dNb[1];
            const double adv2 = wv[2][0] * dNb[0] + wv[2][1] * dNb[1];
            const double adv3 = wv[3][0] * dNb[0] + wv[3][1] * dNb[1];
            const double advE = f.val[2][0] * dNb[0] + f.val[2][1] * dNb[1];
            for (int c = 0; c < 2; ++c) {
              for (int d = 0; d < 2; ++d) {
                const double delta = c == d ? 1.0 : 0.0;
                out.jacobian(iV2(a, c), iV2(b, d)) +=
                    jxw * (delta * (Na * Nb + tau * nu * s2 * lap + tau * Na * adv2) +
                           tau * Na * Nb * wg[2][c][d]);
                out.jacobian(iV2(a, c), iV3(b, d)) +=
                    jxw * (delta * (tau * nu * s3 * lap + tau * Na * adv3) +
                           tau * Na * Nb * wg[3][c][d]);
                out.jacobian(iV3(a, c), iV2(b, d)) +=
                    jxw * (delta * (nu * lap + Na * advE) + Na * Nb * f.grad[2][c][d]);
                if (c == d)
                  out.jacobian(iV3(a, c), iV3(b, d)) += jxw * Na * Nb / tau;
              }
            }
          }
          for (int b = 0; b < P; ++b) {
            const double Pb = Np[b];
            for (int c = 0; c < 2; ++c) {
              out.jacobian(iV2(a, c), iP2(b)) += -jxw * tau * s2 * Pb * dNa[c];
              out.jacobian(iV2(a, c), iP3(b)) += -jxw * tau * s3 * Pb * dNa[c];
              out.jacobian(iV3(a, c), iP2(b)) += -jxw * Pb * dNa[c];
            }
          }
        }
        for (int b = 0; b < P; ++b) {
          const double Pb = Np[b];
          for (int a = 0; a < N; ++a) {
            const auto& dNa = dNv[a];
            for (int d = 0; d < 2; ++d) {
              out.jacobian(iP2(b), iV2(a, d)) += jxw * tau * s2 * Pb * dNa[d];
              out.jacobian(iP2(b), iV3(a, d)) += jxw * tau * s3 * Pb * dNa[d];
              out.jacobian(iP3(b), iV2(a, d)) += jxw * Pb * dNa[d];
            }
          }
        }
      }
    } else {
      // linear-in-time scheme: two-point Gauss over the interval
      const auto fL = evalField(data.f, cd.xq[q], t0);
      const auto fR = evalField(data.f, cd.xq[q], t0 + tau);
      for (int a = 0; a < N; ++a) {
        const double Na = Nv[a];
        for (int c = 0; c < 2; ++c)
          out.residual[iV2(a, c)] += jxw * (f.val[2][c] - f.val[0][c]) * Na;
      }
      for (int iq = 0; iq < 2; ++iq) {
        const double th = kGauss2[iq], wq = 0.5;
        double vq[2], gq[2][2], fq[2];
        for (int c = 0; c < 2; ++c) {
          vq[c] = (1 - th) * f.val[0][c] + th * f.val[2][c];
          fq[c] = (1 - th) * fL[c] + th * fR[c];
          gq[c][0] = (1 - th) * f.grad[0][c][0] + th * f.grad[2][c][0];
          gq[c][1] = (1 - th) * f.grad[0][c][1] + th * f.grad[2][c][1];
        }
        const double pq = (1 - th) * f.pv[0] + th * f.pv[2];
        const double divq = gq[0][0] + gq[1][1];
        const double scale = jxw * tau * wq;
        for (int a = 0; a < N; ++a) {
          const double Na = Nv[a];
          const auto& dNa = dNv[a];
          for (int c = 0; c < 2; ++c) {
            const double convc = gq[c][0] * vq[0] + gq[c][1] * vq[1];
            out.residual[iV2(a, c)] +=
                scale * (convc * Na + nu * (gq[c][0] * dNa[0] + gq[c][1] * dNa[1]) -
                         pq * dNa[c] - fq[c] * Na);
          }
        }
        for (int b = 0; b < P; ++b) out.residual[iP2(b)] += scale * divq * Np[b];

        if (wantJacobian) {
          for (int a = 0; a < N; ++a) {
            const double Na = Nv[a];
            const auto& dNa = dNv[a];
            for (int b = 0; b < N; ++b) {
              const double Nb = Nv[b];
              const auto& dNb = dNv[b];
              const double lap = dNa[0] * dNb[0] + dNa[1] * dNb[1];
              const double adv = vq[0] * dNb[0] + vq[1] * dNb[1];
              for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                  out.jacobian(iV2(a, c), iV2(b, d)) +=
                      scale * th *
                      ((c == d ? nu * lap + Na * adv : 0.0) + Na * Nb * gq[c][d]);
            }
            for (int b = 0; b < P; ++b) {
              for (int c = 0; c < 2; ++c)
                out.jacobian(iV2(a, c), iP2(b)) += -scale * th * Np[b] * dNa[c];
            }
          }
          for (int b = 0; b < P; ++b)
            for (int a = 0; a < N; ++a)
              for (int d = 0; d < 2; ++d)
                out.jacobian(iP2(b), iV2(a, d)) +=
                    scale * th * Np[b] * dNv[a][d];
        }
      }
      if (wantJacobian) {
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b)
            for (int c = 0; c < 2; ++c)
              out.jacobian(iV2(a, c), iV2(b, c)) += jxw * Nv[a] * Nv[b];
      }
    }
  }
}

void facet_block(const Discretization& disc, const ProblemData& data,
                 const IntervalState& state, int dirichletFacet, bool wantJacobian,
                 LocalBlock& out) {
  const auto& fd = disc.dirichletFacets.at(dirichletFacet);
  const int N = disc.pair.velocity.element.numDofs();
  const int P = disc.pair.pressure.element.numDofs();
  const bool cubic = disc.scheme == Scheme::Gcc13;
  const int L = cubic ? 2 * (2 * N + P) : 2 * N + P;
  out.dofs = disc.facetUnknowns(dirichletFacet);
  out.residual.setZero(L);
  if (wantJacobian) out.jacobian.setZero(L, L);

  const LocalCoefficients loc(disc, state, fd.cell);
  const double tau = state.tau, t0 = state.t0, nu = data.nu;
  const double eta1 = disc.nitsche.eta1, eta2 = disc.nitsche.eta2;
  const double h = fd.h;
  const auto n = fd.normal;
  const auto& W = weights();

  const int oP2 = 2 * N, oV3 = 2 * N + P, oP3 = 2 * (2 * N) + P;
  auto iV2 = [](int a, int c) { return 2 * a + c; };
  auto iP2 = [oP2](int b) { return oP2 + b; };
  auto iV3 = [oV3](int a, int c) { return oV3 + 2 * a + c; };
  auto iP3 = [oP3](int b) { return oP3 + b; };

  const int nk = static_cast<int>(fd.w.size());
  for (int k = 0; k < nk; ++k) {
    const auto& Nv = fd.vVal[k];
    const auto& Np = fd.pVal[k];
    const auto& dNv = fd.vGrad[k];
    const double wk = fd.w[k];
    const auto f = loc.fieldsAt(disc, Nv, dNv, Np);

    if (cubic) {
      const auto gc = slotCoefficients(data.g, data.dg, fd.xq[k], t0, tau);
      // normal derivatives and boundary mismatches per slot
      double dn[4][2], jump[4][2], jn[4];
      for (int l = 0; l < 4; ++l) {
        for (int c = 0; c < 2; ++c) {
          dn[l][c] = f.grad[l][c][0] * n[0] + f.grad[l][c][1] * n[1];
          jump[l][c] = f.val[l][c] - gc[l][c];
        }
        jn[l] = jump[l][0] * n[0] + jump[l][1] * n[1];
      }
      for (int a = 0; a < N; ++a) {
        const double Na = Nv[a];
        const double dNan = dNv[a][0] * n[0] + dNv[a][1] * n[1];
        for (int c = 0; c < 2; ++c) {
          double r1 = 0.0;
          for (int l = 0; l < 4; ++l) {
            r1 += W.s[l] * (-(nu * dn[l][c] - f.pv[l] * n[c]) * Na -
                            nu * dNan * jump[l][c] + eta1 * nu / h * jump[l][c] * Na +
                            eta2 / h * jn[l] * n[c] * Na);
          }
          out.residual[iV2(a, c)] += wk * tau * r1;
          out.residual[iV3(a, c)] +=
              wk * (-(nu * dn[2][c] - f.pv[2] * n[c]) * Na - nu * dNan * jump[2][c] +
                    eta1 * nu / h * jump[2][c] * Na + eta2 / h * jn[2] * n[c] * Na);
        }
      }
      for (int b = 0; b < P; ++b) {
        double r2 = 0.0;
        for (int l = 0; l < 4; ++l) r2 += W.s[l] * jn[l];
        out.residual[iP2(b)] += -wk * tau * r2 * Np[b];
        out.residual[iP3(b)] += -wk * jn[2] * Np[b];
      }

      if (wantJacobian) {
        const double s2 = W.s[2], s3 = W.s[3];
        for (int a = 0; a < N; ++a) {
          const double Na = Nv[a];
          const double dNan = dNv[a][0] * n[0] + dNv[a][1] * n[1];
          for (int b = 0; b < N; ++b) {
            const double Nb = Nv[b];
            const double dNbn = dNv[b][0] * n[0] + dNv[b][1] * n[1];
            const double sym = -nu * (dNbn * Na + dNan * Nb) + eta1 * nu / h * Na * Nb;
            for (int c = 0; c < 2; ++c) {
              for (int d = 0; d < 2; ++d) {
                const double pen = eta2 / h * Na * Nb * n[c] * n[d];
                const double core = (c == d ? sym : 0.0) + pen;
                out.jacobian(iV2(a, c), iV2(b, d)) += wk * tau * s2 * core;
                out.jacobian(iV2(a, c), iV3(b, d)) += wk * tau * s3 * core;
                out.jacobian(iV3(a, c), iV2(b, d)) += wk * core;
              }
            }
          }
          for (int b = 0; b < P; ++b) {
            const double Pb = Np[b];
            for (int c = 0; c < 2; ++c) {
              out.jacobian(iV2(a, c), iP2(b)) += wk * tau * s2 * Pb * n[c] * Na;
              out.jacobian(iV2(a, c), iP3(b)) += wk * tau * s3 * Pb * n[c] * Na;
              out.jacobian(iV3(a, c), iP2(b)) += wk * Pb * n[c] * Na;
            }
          }
        }
        for (int b = 0; b < P; ++b) {
          const double Pb = Np[b];
          for (int a = 0; a < N; ++a) {
            const double Na = Nv[a];
            for (int d = 0; d < 2; ++d) {
              out.jacobian(iP2(b), iV2(a, d)) += -wk * tau * s2 * Pb * Na * n[d];
              out.jacobian(iP2(b), iV3(a, d)) += -wk * tau * s3 * Pb * Na * n[d];
              out.jacobian(iP3(b), iV2(a, d)) += -wk * Pb * Na * n[d];
            }
          }
        }
      }
    } else {
      const auto gL = evalField(data.g, fd.xq[k], t0);
      const auto gR = evalField(data.g, fd.xq[k], t0 + tau);
      for (int iq = 0; iq < 2; ++iq) {
        const double th = kGauss2[iq], wq = 0.5;
        double vq[2], gq[2][2], gbq[2];
        for (int c = 0; c < 2; ++c) {
          vq[c] = (1 - th) * f.val[0][c] + th * f.val[2][c];
          gbq[c] = (1 - th) * gL[c] + th * gR[c];
          gq[c][0] = (1 - th) * f.grad[0][c][0] + th * f.grad[2][c][0];
          gq[c][1] = (1 - th) * f.grad[0][c][1] + th * f.grad[2][c][1];
        }
        const double pq = (1 - th) * f.pv[0] + th * f.pv[2];
        const double jump[2] = {vq[0] - gbq[0], vq[1] - gbq[1]};
        const double jn = jump[0] * n[0] + jump[1] * n[1];
        const double scale = wk * tau * wq;
        for (int a = 0; a < N; ++a) {
          const double Na = Nv[a];
          const double dNan = dNv[a][0] * n[0] + dNv[a][1] * n[1];
          for (int c = 0; c < 2; ++c) {
            const double dnq = gq[c][0] * n[0] + gq[c][1] * n[1];
            out.residual[iV2(a, c)] +=
                scale * (-(nu * dnq - pq * n[c]) * Na - nu * dNan * jump[c] +
                         eta1 * nu / h * jump[c] * Na + eta2 / h * jn * n[c] * Na);
          }
        }
        for (int b = 0; b < P; ++b) out.residual[iP2(b)] += -scale * jn * Np[b];

        if (wantJacobian) {
          for (int a = 0; a < N; ++a) {
            const double Na = Nv[a];
            const double dNan = dNv[a][0] * n[0] + dNv[a][1] * n[1];
            for (int b = 0; b < N; ++b) {
              const double Nb = Nv[b];
              const double dNbn = dNv[b][0] * n[0] + dNv[b][1] * n[1];
              const double sym =
                  -nu * (dNbn * Na + dNan * Nb) + eta1 * nu / h * Na * Nb;
              for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                  out.jacobian(iV2(a, c), iV2(b, d)) +=
                      scale * th *
                      ((c == d ? sym : 0.0) + eta2 / h * Na * Nb * n[c] * n[d]);
            }
            for (int b = 0; b < P; ++b)
              for (int c = 0; c < 2; ++c)
                out.jacobian(iV2(a, c), iP2(b)) += scale * th * Np[b] * n[c] * Na;
          }
          for (int b = 0; b < P; ++b)
            for (int a = 0; a < N; ++a)
              for (int d = 0; d < 2; ++d)
                out.jacobian(iP2(b), iV2(a, d)) +=
                    -scale * th * Np[b] * Nv[a] * n[d];
        }
      }
    }
  }
}

Eigen::VectorXd pack_unknowns(const Discretization& disc, const IntervalState& state) {
  Eigen::VectorXd x(disc.dim());
  const int J2 = disc.velocityDofs(), M = disc.pressureDofs();
  x.segment(0, J2) = state.v2;
  x.segment(J2, M) = state.p2;
  if (disc.scheme == Scheme::Gcc13) {
    x.segment(J2 + M, J2) = state.v3;
    x.segment(2 * J2 + M, M) = state.p3;
  }
  return x;
}

void unpack_unknowns(const Discretization& disc, const Eigen::VectorXd& x,
                     IntervalState& state) {
  const int J2 = disc.velocityDofs(), M = disc.pressureDofs();
  state.v2 = x.segment(0, J2);
  state.p2 = x.segment(J2, M);
  if (disc.scheme == Scheme::Gcc13) {
    state.v3 = x.segment(J2 + M, J2);
    state.p3 = x.segment(2 * J2 + M, M);
  }
}

Eigen::VectorXd assemble_residual(const Discretization& disc, const ProblemData& data,
                                  const IntervalState& state) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(disc.dim());
  LocalBlock local;
  for (int c = 0; c < disc.mesh->numCells(); ++c) {
    cell_block(disc, data, state, c, false, local);
    for (size_t i = 0; i < local.dofs.size(); ++i)
      r[local.dofs[i]] += local.residual[static_cast<int>(i)];
  }
  for (size_t fk = 0; fk < disc.dirichletFacets.size(); ++fk) {
    facet_block(disc, data, state, static_cast<int>(fk), false, local);
    for (size_t i = 0; i < local.dofs.size(); ++i)
      r[local.dofs[i]] += local.residual[static_cast<int>(i)];
  }
  return r;
}

Eigen::MatrixXd assemble_dense_jacobian(const Discretization& disc,
                                        const ProblemData& data,
                                        const IntervalState& state) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(disc.dim(), disc.dim());
  LocalBlock local;
  for (int c = 0; c < disc.mesh->numCells(); ++c) {
    cell_block(disc, data, state, c, true, local);
    for (size_t i = 0; i < local.dofs.size(); ++i)
      for (size_t j = 0; j < local.dofs.size(); ++j)
        J(local.dofs[i], local.dofs[j]) +=
            local.jacobian(static_cast<int>(i), static_cast<int>(j));
  }
  for (size_t fk = 0; fk < disc.dirichletFacets.size(); ++fk) {
    facet_block(disc, data, state, static_cast<int>(fk), true, local);
    for (size_t i = 0; i < local.dofs.size(); ++i)
      for (size_t j = 0; j < local.dofs.size(); ++j)
        J(local.dofs[i], local.dofs[j]) +=
            local.jacobian(static_cast<int>(i), static_cast<int>(j));
  }
  return J;
}

}  // namespace gcflow::forms
