#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "slipflow/geometry.hpp"

namespace slipflow {

enum class BoundaryTag {
  NoSlipWall,
  SlipWall,
  Top,
  Inflow,
  Outflow,
  PeriodicLeft,
  PeriodicRight,
  FreeStreamTop,
  MicroLeft,
  MicroRight,
};

std::string to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& name);

// Conforming triangle mesh. Triangles are CCW; every exterior edge carries
// exactly one tag; periodic_pairs maps left-side vertices to their right-side
// images offset by `period` in x1.
struct TriangleMesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;

  struct BoundaryEdge {
    int a = -1, b = -1;
    BoundaryTag tag = BoundaryTag::NoSlipWall;
  };
  std::vector<BoundaryEdge> boundary_edges;

  std::vector<std::array<int, 2>> periodic_pairs; // {left id, right id}
  double period = 0;

  int cell_count() const { return static_cast<int>(triangles.size()); }
  std::array<double, 4> bounding_box() const; // {xmin, xmax, ymin, ymax}
  bool has_tag(BoundaryTag tag) const;
};

// Throws MeshError / PeriodicMismatch when a structural invariant is violated
// (non-positive area, dangling edges, tag gaps, broken pairing, ...).
void audit_mesh(const TriangleMesh& mesh);

// ---------------------------------------------------------------- macro ----

struct MacroChannelSpec {
  double length = 1.0;
  double height = 1.0;
  std::function<double(double)> top_fn; // curved top override (optional)
  bool periodic_sides = true;
  // SlipWall window on the bottom; edges outside it are NoSlipWall.
  double slip_begin = 0.0;
  double slip_end = 1.0;
  int nx = 40, ny = 40;
  // Optional concentration of rows below y = grade_band (0 disables).
  double grade_band = 0.0;
  double grade_fraction = 0.5;
};

TriangleMesh mesh_macro_channel(const MacroChannelSpec& spec);

struct MacroBfsSpec {
  // Outline (0,H)-(0,S)-(Li,S)-(Li,0)-(L,0)-(L,H) with the step corner at
  // (Li, 0); defaults follow the benchmark geometry.
  double inlet_length = 5.0;
  double length = 23.0;
  double height = 2.0;
  double step_y = 1.0;
  double slip_begin = 6.0;
  double slip_end = 16.0;
  int nx_inlet = 30;
  int nx_pre = 6;     // cells in [inlet_length, slip_begin]
  int nx_window = 64; // cells in [slip_begin, slip_end]
  int nx_tail = 20;   // cells in [slip_end, length]
  int ny_low = 14;    // rows in [0, step_y]
  int ny_high = 10;   // rows in [step_y, height]
  double grade_band = 0.0; // concentrate low-block rows below this height
  double grade_fraction = 0.5;
};

TriangleMesh mesh_macro_bfs(const MacroBfsSpec& spec);

// ------------------------------------------------------------------ dns ----

struct DnsChannelSpec {
  double length = 1.0;
  double height = 1.0;
  std::function<double(double)> top_fn;
  bool periodic_sides = true;
  // Reconcile wall(0) != wall(length) by blending the sampled wall onto
  // wall(0) over the last two periods; required for periodic sides over a
  // non-periodic wall, rejected otherwise.
  bool seam_blend = false;
  int wall_resolution = 12; // cells per roughness period
  int ny = 32;
  double grade_band = 0.0; // defaults to 4*epsilon when 0
  double grade_fraction = 0.5;
};

TriangleMesh mesh_rough_dns(const RoughnessProfile& profile,
                            const DnsChannelSpec& spec);

struct DnsBfsSpec {
  double inlet_length = 5.0;
  double length = 23.0;
  double height = 2.0;
  double step_y = 1.0;
  int wall_resolution = 12; // cells per period inside the rough window
  int nx_inlet = 50;
  int nx_pre = 12;
  int nx_tail = 40;
  int ny_low = 26;
  int ny_high = 14;
  double grade_band = 0.0; // defaults to 4*epsilon
  double grade_fraction = 0.55;
  double rough_begin = 6.0;
  double rough_end = 16.0;
};

TriangleMesh mesh_bfs_dns(const RoughnessProfile& profile,
                          const DnsBfsSpec& spec);

// ---------------------------------------------------------------- micro ----

struct MicroMeshSpec {
  double site = 0;
  double width = 0;  // one roughness period unless stated otherwise
  double height = 0; // gamma
  int nx = 12;
  int ny = 0; // 0 = derived from the aspect ratio
  bool periodic_sides = true;
  double grade_band = 0.0; // defaults to height/4
  double grade_fraction = 0.55;
};

TriangleMesh mesh_micro(const RoughnessProfile& profile,
                        const MicroMeshSpec& spec);

// ----------------------------------------------------------------- cell ----

// Periodic strip [0,1] x [phi(y1), y2top]; bottom NoSlipWall, top Top.
// Requires y2top >= H + 2; the vertical levels above H + 1 are marched with a
// fixed growth schedule so solutions at different truncation heights share
// the near-wall discretization.
TriangleMesh mesh_cell_domain(const UnitCellShape& shape, double y2top,
                              int resolution);

// ------------------------------------------------------------------- io ----

void save_mesh_json(const TriangleMesh& mesh, const std::string& path);
TriangleMesh load_mesh_json(const std::string& path);

} // namespace slipflow
