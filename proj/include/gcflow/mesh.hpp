#pragma once

/// Structured quadrilateral meshes for the benchmark geometries: the unit
/// square and a channel with a circular obstacle (O-grid collar around the
/// circle embedded in a block background grid).  Includes a plain-text mesh
/// format with lossless round-trip and uniform refinement.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gcflow::mesh {

enum class FacetMarker : std::uint8_t { Inflow = 0, Wall = 1, Outflow = 2 };

const char* marker_name(FacetMarker m);
FacetMarker marker_from_name(const std::string& name);

using Point = std::array<double, 2>;

/// Boundary facet referencing its owning cell; local edge e joins cell
/// corners e and (e+1)%4.
struct BoundaryFacet {
  int cell;
  int localEdge;
  FacetMarker marker;
};

struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 4>> cells;  // corner node ids, CCW
  std::vector<BoundaryFacet> facets;

  int numNodes() const { return static_cast<int>(nodes.size()); }
  int numCells() const { return static_cast<int>(cells.size()); }

  std::array<int, 2> facetNodes(const BoundaryFacet& f) const {
    const auto& c = cells[f.cell];
    return {c[f.localEdge], c[(f.localEdge + 1) % 4]};
  }

  /// Largest corner-to-corner distance of a cell.
  double cellDiameter(int cell) const;

  /// Outward unit normal of a boundary facet (constant per straight facet).
  Point facetNormal(const BoundaryFacet& f) const;
};

/// n-by-n grid on the unit square; every side is marked Wall.
Mesh generate_unit_square(int n);

struct ChannelGeometry {
  double length = 2.2;
  double height = 0.41;
  Point obstacleCenter = {0.2, 0.2};
  double obstacleRadius = 0.05;
};

/// Channel with circular obstacle.  Level 0 is the coarsest mesh; each level
/// doubles all block resolutions.  Obstacle-boundary nodes lie on the circle
/// to within 1e-12 * radius.  Markers: x=0 Inflow, x=length Outflow, walls
/// and obstacle Wall.  Throws std::invalid_argument for geometry where the
/// obstacle does not fit strictly inside the channel.
Mesh generate_channel_cylinder(const ChannelGeometry& geometry, int level);

/// Each cell splits into four via edge midpoints and the centroid.
Mesh refine_uniform(const Mesh& mesh);

/// Plain-text "quadmesh 1" format; coordinates at 17 significant digits so
/// write/read round-trips bit-exactly.
void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh_file(const Mesh& mesh, const std::string& path);
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

/// Structural checks: CCW corner ordering with positive bilinear-map
/// Jacobian, conforming edges (interior edges shared by exactly two cells),
/// every boundary edge covered by exactly one marked facet.  Throws
/// std::runtime_error on violation.
void validate_mesh(const Mesh& mesh);

/// Geometric equality up to node renumbering (coordinates compared exactly).
bool equivalent_meshes(const Mesh& a, const Mesh& b);

}  // namespace gcflow::mesh
