#include "gcflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gcflow::mesh {

const char* marker_name(FacetMarker m) {
  switch (m) {
    case FacetMarker::Inflow: return "inflow";
    case FacetMarker::Wall: return "wall";
    case FacetMarker::Outflow: return "outflow";
  }
  return "wall";
}

FacetMarker marker_from_name(const std::string& name) {
  if (name == "inflow") return FacetMarker::Inflow;
  if (name == "wall") return FacetMarker::Wall;
  if (name == "outflow") return FacetMarker::Outflow;
  throw std::runtime_error("unknown facet marker: " + name);
}

double Mesh::cellDiameter(int cell) const {
  const auto& c = cells[cell];
  double d = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      d = std::max(d, std::hypot(nodes[c[i]][0] - nodes[c[j]][0],
                                 nodes[c[i]][1] - nodes[c[j]][1]));
  return d;
}

Point Mesh::facetNormal(const BoundaryFacet& f) const {
  const auto fn = facetNodes(f);
  const double dx = nodes[fn[1]][0] - nodes[fn[0]][0];
  const double dy = nodes[fn[1]][1] - nodes[fn[0]][1];
  const double len = std::hypot(dx, dy);
  // CCW cell orientation puts the outward normal at -90 degrees to the edge
  return {dy / len, -dx / len};
}

Mesh generate_unit_square(int n) {
  if (n < 1) throw std::invalid_argument("generate_unit_square: n must be >= 1");
  Mesh mesh;
  mesh.nodes.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto id = [n](int i, int j) { return i + (n + 1) * j; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      mesh.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  auto cid = [n](int i, int j) { return i + n * j; };
  for (int i = 0; i < n; ++i) {
    mesh.facets.push_back({cid(i, 0), 0, FacetMarker::Wall});      // bottom
    mesh.facets.push_back({cid(i, n - 1), 2, FacetMarker::Wall});  // top
  }
  for (int j = 0; j < n; ++j) {
    mesh.facets.push_back({cid(0, j), 3, FacetMarker::Wall});      // left
    mesh.facets.push_back({cid(n - 1, j), 1, FacetMarker::Wall});  // right
  }
  return mesh;
}

namespace {

/// 1D subdivision of [a,b] into n equal segments.
std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> pts(n + 1);
  for (int i = 0; i <= n; ++i) pts[i] = a + (b - a) * i / n;
  pts.front() = a;
  pts.back() = b;
  return pts;
}

}  // namespace

Mesh generate_channel_cylinder(const ChannelGeometry& g, int level) {
  if (level < 0) throw std::invalid_argument("mesh level must be >= 0");
  const double cx = g.obstacleCenter[0], cy = g.obstacleCenter[1];
  const double R = g.obstacleRadius;
  const double gap = std::min({cx, g.length - cx, cy, g.height - cy});
  if (!(R > 0.0) || R >= gap)
    throw std::invalid_argument("obstacle must lie strictly inside the channel");

  // Square collar frame around the obstacle; the O-grid ring fills the space
  // between the circle and the frame, the rest is a 3x3 block background with
  // the middle block removed.
  const double a = 0.75 * gap;
  if (a <= 1.2 * R)
    throw std::invalid_argument("obstacle too close to the channel boundary");

  // Base block counts sized against the frame cell width, all doubled per
  // level so h halves uniformly.
  const int scale = 1 << level;
  const int mBase = 2;
  const double hFrame = 2 * a / mBase;
  auto baseCount = [&](double width) {
    return std::max(1, static_cast<int>(std::round(width / hFrame)));
  };
  const int m = mBase * scale;  // cells per frame side
  const int nr = m;             // radial ring layers
  const int nLeft = baseCount(cx - a) * scale;
  const int nRight = baseCount(g.length - cx - a) * scale;
  const int nBottom = baseCount(cy - a) * scale;
  const int nTop = baseCount(g.height - cy - a) * scale;

  // x and y grid lines of the background blocks
  std::vector<double> xs;
  {
    auto seg = linspace(0.0, cx - a, nLeft);
    xs.insert(xs.end(), seg.begin(), seg.end());
    seg = linspace(cx - a, cx + a, m);
    xs.insert(xs.end(), seg.begin() + 1, seg.end());
    seg = linspace(cx + a, g.length, nRight);
    xs.insert(xs.end(), seg.begin() + 1, seg.end());
  }
  std::vector<double> ys;
  {
    auto seg = linspace(0.0, cy - a, nBottom);
    ys.insert(ys.end(), seg.begin(), seg.end());
    seg = linspace(cy - a, cy + a, m);
    ys.insert(ys.end(), seg.begin() + 1, seg.end());
    seg = linspace(cy + a, g.height, nTop);
    ys.insert(ys.end(), seg.begin() + 1, seg.end());
  }
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  // index ranges of the frame block within the grid lines
  const int fx0 = static_cast<int>(std::find(xs.begin(), xs.end(), cx - a) - xs.begin());
  const int fy0 = static_cast<int>(std::find(ys.begin(), ys.end(), cy - a) - ys.begin());
  const int fx1 = fx0 + m, fy1 = fy0 + m;

  Mesh mesh;
  std::vector<int> nodeId(static_cast<size_t>((nx + 1) * (ny + 1)), -1);
  auto gridIndex = [&](int i, int j) { return i + (nx + 1) * j; };
  auto interiorOfFrame = [&](int i, int j) {
    return i > fx0 && i < fx1 && j > fy0 && j < fy1;
  };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (interiorOfFrame(i, j)) continue;
      nodeId[gridIndex(i, j)] = mesh.numNodes();
      mesh.nodes.push_back({xs[i], ys[j]});
    }
  }

  auto inFrameBlock = [&](int i, int j) {
    return i >= fx0 && i < fx1 && j >= fy0 && j < fy1;
  };
  std::vector<std::array<int, 2>> cellGridPos;  // for facet marking below
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (inFrameBlock(i, j)) continue;
      mesh.cells.push_back({nodeId[gridIndex(i, j)], nodeId[gridIndex(i + 1, j)],
                            nodeId[gridIndex(i + 1, j + 1)], nodeId[gridIndex(i, j + 1)]});
      cellGridPos.push_back({i, j});
    }
  }

  // Frame border nodes walked CCW from the bottom-left frame corner; these
  // already exist in the background grid.
  std::vector<int> frameIds;
  for (int i = fx0; i < fx1; ++i) frameIds.push_back(nodeId[gridIndex(i, fy0)]);
  for (int j = fy0; j < fy1; ++j) frameIds.push_back(nodeId[gridIndex(fx1, j)]);
  for (int i = fx1; i > fx0; --i) frameIds.push_back(nodeId[gridIndex(i, fy1)]);
  for (int j = fy1; j > fy0; --j) frameIds.push_back(nodeId[gridIndex(fx0, j)]);
  const int nring = static_cast<int>(frameIds.size());  // == 4m

  // Ring layers: s=0 on the circle (new nodes, exactly radius R from the
  // center), s=nr on the frame (existing nodes), linear blend between.
  std::vector<std::vector<int>> ring(nr + 1, std::vector<int>(nring));
  ring[nr] = frameIds;
  std::vector<Point> circlePts(nring);
  for (int k = 0; k < nring; ++k) {
    const Point F = mesh.nodes[frameIds[k]];
    const double dx = F[0] - cx, dy = F[1] - cy;
    const double len = std::hypot(dx, dy);
    circlePts[k] = {cx + R * dx / len, cy + R * dy / len};
  }
  for (int s = 0; s < nr; ++s) {
    const double w = static_cast<double>(s) / nr;
    for (int k = 0; k < nring; ++k) {
      const Point C = circlePts[k];
      const Point F = mesh.nodes[frameIds[k]];
      ring[s][k] = mesh.numNodes();
      mesh.nodes.push_back({C[0] + w * (F[0] - C[0]), C[1] + w * (F[1] - C[1])});
    }
  }
  std::vector<int> circleCells;  // cells whose local edge 3 lies on the circle
  for (int s = 0; s < nr; ++s) {
    for (int k = 0; k < nring; ++k) {
      const int kn = (k + 1) % nring;
      if (s == 0) circleCells.push_back(mesh.numCells());
      // corner order (inner k, outer k, outer k+1, inner k+1) is CCW because
      // the circumferential walk runs CCW around the obstacle
      mesh.cells.push_back({ring[s][k], ring[s + 1][k], ring[s + 1][kn], ring[s][kn]});
    }
  }

  // Boundary facets of the background outline
  for (size_t c = 0; c < cellGridPos.size(); ++c) {
    const int i = cellGridPos[c][0], j = cellGridPos[c][1];
    if (j == 0) mesh.facets.push_back({static_cast<int>(c), 0, FacetMarker::Wall});
    if (i == nx - 1) mesh.facets.push_back({static_cast<int>(c), 1, FacetMarker::Outflow});
    if (j == ny - 1) mesh.facets.push_back({static_cast<int>(c), 2, FacetMarker::Wall});
    if (i == 0) mesh.facets.push_back({static_cast<int>(c), 3, FacetMarker::Inflow});
  }
  // Obstacle facets: the s=0 cells' inner edges (corners 3 -> 0).  The flow
  // domain lies radially outward, so the facet normal points into the
  // obstacle, i.e. outward with respect to the fluid.
  for (int c : circleCells) mesh.facets.push_back({c, 3, FacetMarker::Wall});

  validate_mesh(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.nodes = mesh.nodes;
  std::map<std::pair<int, int>, int> midpointId;
  auto midpoint = [&](int u, int v) {
    const auto key = std::minmax(u, v);
    auto it = midpointId.find(key);
    if (it != midpointId.end()) return it->second;
    const int id = fine.numNodes();
    fine.nodes.push_back({0.5 * (mesh.nodes[u][0] + mesh.nodes[v][0]),
                          0.5 * (mesh.nodes[u][1] + mesh.nodes[v][1])});
    midpointId.emplace(key, id);
    return id;
  };
  // child c of a parent cell sits at the parent's corner c; child local edges
  // inherit the parent edge layout so facet references can be remapped
  std::vector<std::array<int, 4>> children(mesh.numCells());
  for (int c = 0; c < mesh.numCells(); ++c) {
    const auto& q = mesh.cells[c];
    const int e01 = midpoint(q[0], q[1]), e12 = midpoint(q[1], q[2]);
    const int e23 = midpoint(q[2], q[3]), e30 = midpoint(q[3], q[0]);
    const int cc = fine.numNodes();
    fine.nodes.push_back({0.25 * (mesh.nodes[q[0]][0] + mesh.nodes[q[1]][0] +
                                  mesh.nodes[q[2]][0] + mesh.nodes[q[3]][0]),
                          0.25 * (mesh.nodes[q[0]][1] + mesh.nodes[q[1]][1] +
                                  mesh.nodes[q[2]][1] + mesh.nodes[q[3]][1])});
    children[c][0] = fine.numCells();
    fine.cells.push_back({q[0], e01, cc, e30});
    children[c][1] = fine.numCells();
    fine.cells.push_back({q[1], e12, cc, e01});
    children[c][2] = fine.numCells();
    fine.cells.push_back({q[2], e23, cc, e12});
    children[c][3] = fine.numCells();
    fine.cells.push_back({q[3], e30, cc, e23});
  }
  // parent edge e splits into halves owned by children e and (e+1)%4; in
  // child c the corner list starts at parent corner c, so the half of parent
  // edge e touching parent corner c is the child's local edge 0, and the half
  // touching corner (e+1)%4 is local edge 3 of child (e+1)%4
  for (const auto& f : mesh.facets) {
    const int e = f.localEdge;
    fine.facets.push_back({children[f.cell][e], 0, f.marker});
    fine.facets.push_back({children[f.cell][(e + 1) % 4], 3, f.marker});
  }
  return fine;
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  char buf[64];
  out << "quadmesh 1\n";
  out << "nodes " << mesh.numNodes() << "\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p[0], p[1]);
    out << buf;
  }
  out << "cells " << mesh.numCells() << "\n";
  for (const auto& c : mesh.cells)
    out << c[0] << " " << c[1] << " " << c[2] << " " << c[3] << "\n";
  out << "facets " << mesh.facets.size() << "\n";
  for (const auto& f : mesh.facets)
    out << f.cell << " " << f.localEdge << " " << marker_name(f.marker) << "\n";
}

void write_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open mesh file for writing: " + path);
  write_mesh(mesh, out);
}

Mesh read_mesh(std::istream& in) {
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "quadmesh" || version != 1)
    throw std::runtime_error("unsupported mesh header");
  Mesh mesh;
  int count = 0;
  in >> word >> count;
  if (word != "nodes") throw std::runtime_error("expected nodes section");
  mesh.nodes.resize(count);
  for (auto& p : mesh.nodes) in >> p[0] >> p[1];
  in >> word >> count;
  if (word != "cells") throw std::runtime_error("expected cells section");
  mesh.cells.resize(count);
  for (auto& c : mesh.cells) in >> c[0] >> c[1] >> c[2] >> c[3];
  in >> word >> count;
  if (word != "facets") throw std::runtime_error("expected facets section");
  mesh.facets.resize(count);
  for (auto& f : mesh.facets) {
    std::string marker;
    in >> f.cell >> f.localEdge >> marker;
    f.marker = marker_from_name(marker);
  }
  if (!in) throw std::runtime_error("truncated mesh stream");
  return mesh;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  return read_mesh(in);
}

void validate_mesh(const Mesh& mesh) {
  auto fail = [](const std::string& why) { throw std::runtime_error("invalid mesh: " + why); };
  for (int c = 0; c < mesh.numCells(); ++c) {
    const auto& q = mesh.cells[c];
    for (int v : q)
      if (v < 0 || v >= mesh.numNodes()) fail("cell corner out of range");
    // bilinear map Jacobian at the corners equals the corner cross products;
    // positivity there gives a positive Jacobian on the whole convex cell
    for (int k = 0; k < 4; ++k) {
      const Point& a = mesh.nodes[q[k]];
      const Point& b = mesh.nodes[q[(k + 1) % 4]];
      const Point& d = mesh.nodes[q[(k + 3) % 4]];
      const double cross = (b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]);
      if (!(cross > 0.0)) fail("cell is not CCW-convex");
    }
  }
  // conformity: interior edges shared by exactly two cells, boundary by one
  std::map<std::pair<int, int>, int> edgeCount;
  for (const auto& q : mesh.cells)
    for (int e = 0; e < 4; ++e)
      edgeCount[std::minmax(q[e], q[(e + 1) % 4])] += 1;
  for (const auto& [edge, count] : edgeCount)
    if (count > 2) fail("edge shared by more than two cells");
  std::set<std::pair<int, int>> markedEdges;
  for (const auto& f : mesh.facets) {
    if (f.cell < 0 || f.cell >= mesh.numCells() || f.localEdge < 0 || f.localEdge > 3)
      fail("facet reference out of range");
    const auto fn = mesh.facetNodes(f);
    const auto key = std::minmax(fn[0], fn[1]);
    if (edgeCount[key] != 1) fail("marked facet is not a boundary edge");
    if (!markedEdges.insert(key).second) fail("boundary edge marked twice");
  }
  for (const auto& [edge, count] : edgeCount)
    if (count == 1 && !markedEdges.count(edge)) fail("boundary edge without marker");
}

bool equivalent_meshes(const Mesh& a, const Mesh& b) {
  if (a.numNodes() != b.numNodes() || a.numCells() != b.numCells() ||
      a.facets.size() != b.facets.size())
    return false;
  std::map<std::pair<double, double>, int> lookup;
  for (int i = 0; i < b.numNodes(); ++i) lookup[{b.nodes[i][0], b.nodes[i][1]}] = i;
  std::vector<int> map(a.numNodes(), -1);
  for (int i = 0; i < a.numNodes(); ++i) {
    auto it = lookup.find({a.nodes[i][0], a.nodes[i][1]});
    if (it == lookup.end()) return false;
    map[i] = it->second;
  }
  // compare cells as rotation-invariant corner cycles
  auto canonicalCell = [](std::array<int, 4> c) {
    int best = 0;
    for (int k = 1; k < 4; ++k)
      if (c[k] < c[best]) best = k;
    return std::array<int, 4>{c[best], c[(best + 1) % 4], c[(best + 2) % 4],
                              c[(best + 3) % 4]};
  };
  std::multiset<std::array<int, 4>> cellsA, cellsB;
  for (const auto& c : a.cells)
    cellsA.insert(canonicalCell({map[c[0]], map[c[1]], map[c[2]], map[c[3]]}));
  for (const auto& c : b.cells) cellsB.insert(canonicalCell(c));
  if (cellsA != cellsB) return false;
  std::multiset<std::tuple<int, int, int>> facetsA, facetsB;
  for (const auto& f : a.facets) {
    const auto fn = a.facetNodes(f);
    facetsA.emplace(std::min(map[fn[0]], map[fn[1]]), std::max(map[fn[0]], map[fn[1]]),
                    static_cast<int>(f.marker));
  }
  for (const auto& f : b.facets) {
    const auto fn = b.facetNodes(f);
    facetsB.emplace(std::min(fn[0], fn[1]), std::max(fn[0], fn[1]),
                    static_cast<int>(f.marker));
  }
  return facetsA == facetsB;
}

}  // namespace gcflow::mesh
