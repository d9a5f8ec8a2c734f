#include "slipflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "slipflow/errors.hpp"

namespace slipflow {

namespace {

using Json = nlohmann::ordered_json;

uint64_t bits_of(double x) {
  uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  return u;
}

struct VertexKey {
  uint64_t x, y;
  bool operator==(const VertexKey& o) const { return x == o.x && y == o.y; }
};

struct VertexKeyHash {
  size_t operator()(const VertexKey& k) const {
    uint64_t h = k.x * 0x9e3779b97f4a7c15ull ^ (k.y + 0x7f4a7c15ull);
    h ^= h >> 29;
    return static_cast<size_t>(h * 0xbf58476d1ce4e5b9ull);
  }
};

// Accumulates mapped structured patches into one conforming mesh. Vertices on
// shared patch boundaries are deduplicated by exact bit pattern, so adjoining
// patches must be generated from identical coordinate arrays.
struct GridBuilder {
  TriangleMesh mesh;
  std::unordered_map<VertexKey, int, VertexKeyHash> lookup;

  int vertex(double x, double y) {
    VertexKey key{bits_of(x), bits_of(y)};
    auto it = lookup.find(key);
    if (it != lookup.end()) return it->second;
    int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({x, y});
    lookup.emplace(key, id);
    return id;
  }

  // columns[i] holds the y-levels of the column at xs[i]; all columns must
  // have the same length. Returns the vertex-id grid.
  std::vector<std::vector<int>> patch(const std::vector<double>& xs,
                                      const std::vector<std::vector<double>>& columns) {
    const int nx = static_cast<int>(xs.size()) - 1;
    const int ny = static_cast<int>(columns.front().size()) - 1;
    std::vector<std::vector<int>> vid(nx + 1, std::vector<int>(ny + 1));
    for (int i = 0; i <= nx; ++i) {
      if (static_cast<int>(columns[i].size()) != ny + 1)
        throw MeshError("patch columns have unequal row counts");
      for (int j = 0; j <= ny; ++j) vid[i][j] = vertex(xs[i], columns[i][j]);
    }
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        int v00 = vid[i][j], v10 = vid[i + 1][j];
        int v11 = vid[i + 1][j + 1], v01 = vid[i][j + 1];
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      }
    return vid;
  }

  void tag_run(const std::vector<int>& run, BoundaryTag tag) {
    for (size_t i = 0; i + 1 < run.size(); ++i)
      mesh.boundary_edges.push_back({run[i], run[i + 1], tag});
  }

  // Tag a run with a per-edge tag chosen from the midpoint x1 coordinate.
  void tag_run_by_x(const std::vector<int>& run,
                    const std::function<BoundaryTag(double)>& tag_of) {
    for (size_t i = 0; i + 1 < run.size(); ++i) {
      double xm = 0.5 * (mesh.vertices[run[i]][0] + mesh.vertices[run[i + 1]][0]);
      mesh.boundary_edges.push_back({run[i], run[i + 1], tag_of(xm)});
    }
  }
};

std::vector<int> column_of(const std::vector<std::vector<int>>& vid, int i) {
  return vid[i];
}

std::vector<int> row_of(const std::vector<std::vector<int>>& vid, int j) {
  std::vector<int> run(vid.size());
  for (size_t i = 0; i < vid.size(); ++i) run[i] = vid[i][j];
  return run;
}

std::vector<double> uniform_partition(double a, double b, int n) {
  std::vector<double> xs(n + 1);
  for (int i = 0; i <= n; ++i) xs[i] = a + (b - a) * i / n;
  xs[0] = a;
  xs[n] = b;
  return xs;
}

// ny+1 levels in [lo, hi]; a `frac` share of the rows is placed uniformly in
// [lo, band], the rest grows geometrically up to hi. Falls back to uniform
// when the band does not split the interval.
std::vector<double> graded_levels(double lo, double hi, int ny, double band,
                                  double frac) {
  if (!(hi > lo)) throw MeshError("graded_levels needs hi > lo");
  double span = hi - lo;
  if (ny < 2 || frac <= 0 || band <= lo + 1e-12 * span || band >= hi - 0.05 * span)
    return uniform_partition(lo, hi, ny);

  int n_low = std::clamp(static_cast<int>(std::lround(frac * ny)), 1, ny - 1);
  int n_high = ny - n_low;
  double dlow = (band - lo) / n_low;

  std::vector<double> ys(ny + 1);
  for (int j = 0; j <= n_low; ++j) ys[j] = lo + dlow * j;
  ys[n_low] = band;

  double upper = hi - band;
  if (n_high == 1) {
    ys[ny] = hi;
    return ys;
  }
  // Solve dlow * sum_{k=1..n_high} r^k = upper for the growth ratio.
  auto total = [&](double r) {
    double s = 0, t = 1;
    for (int k = 1; k <= n_high; ++k) {
      t *= r;
      s += t;
    }
    return dlow * s;
  };
  double rlo = 1e-4, rhi = 1e4;
  for (int it = 0; it < 200; ++it) {
    double rm = 0.5 * (rlo + rhi);
    (total(rm) < upper ? rlo : rhi) = rm;
  }
  double r = 0.5 * (rlo + rhi), d = dlow;
  for (int k = 1; k < n_high; ++k) {
    d *= r;
    ys[n_low + k] = ys[n_low + k - 1] + d;
  }
  ys[ny] = hi;
  return ys;
}

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

} // namespace

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::NoSlipWall: return "NoSlipWall";
    case BoundaryTag::SlipWall: return "SlipWall";
    case BoundaryTag::Top: return "Top";
    case BoundaryTag::Inflow: return "Inflow";
    case BoundaryTag::Outflow: return "Outflow";
    case BoundaryTag::PeriodicLeft: return "PeriodicLeft";
    case BoundaryTag::PeriodicRight: return "PeriodicRight";
    case BoundaryTag::FreeStreamTop: return "FreeStreamTop";
    case BoundaryTag::MicroLeft: return "MicroLeft";
    case BoundaryTag::MicroRight: return "MicroRight";
  }
  return "unknown";
}

BoundaryTag boundary_tag_from_string(const std::string& name) {
  static const std::unordered_map<std::string, BoundaryTag> map = {
      {"NoSlipWall", BoundaryTag::NoSlipWall},
      {"SlipWall", BoundaryTag::SlipWall},
      {"Top", BoundaryTag::Top},
      {"Inflow", BoundaryTag::Inflow},
      {"Outflow", BoundaryTag::Outflow},
      {"PeriodicLeft", BoundaryTag::PeriodicLeft},
      {"PeriodicRight", BoundaryTag::PeriodicRight},
      {"FreeStreamTop", BoundaryTag::FreeStreamTop},
      {"MicroLeft", BoundaryTag::MicroLeft},
      {"MicroRight", BoundaryTag::MicroRight},
  };
  auto it = map.find(name);
  if (it == map.end()) throw MeshError("unknown boundary tag '" + name + "'");
  return it->second;
}

std::array<double, 4> TriangleMesh::bounding_box() const {
  std::array<double, 4> bb = {1e300, -1e300, 1e300, -1e300};
  for (const auto& v : vertices) {
    bb[0] = std::min(bb[0], v[0]);
    bb[1] = std::max(bb[1], v[0]);
    bb[2] = std::min(bb[2], v[1]);
    bb[3] = std::max(bb[3], v[1]);
  }
  return bb;
}

bool TriangleMesh::has_tag(BoundaryTag tag) const {
  for (const auto& e : boundary_edges)
    if (e.tag == tag) return true;
  return false;
}

void audit_mesh(const TriangleMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  if (nv < 3 || mesh.triangles.empty()) throw MeshError("mesh is empty");

  auto bb = mesh.bounding_box();
  double diam = std::hypot(bb[1] - bb[0], bb[3] - bb[2]);

  // Orientation / degeneracy.
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv)
        throw MeshError("triangle " + std::to_string(t) + " has invalid vertex id");
    const auto& p0 = mesh.vertices[tri[0]];
    const auto& p1 = mesh.vertices[tri[1]];
    const auto& p2 = mesh.vertices[tri[2]];
    double area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) -
                   (p1[1] - p0[1]) * (p2[0] - p0[0]);
    if (!(area2 > 1e-14 * diam * diam * 1e-6) || !(area2 > 0))
      throw MeshError("triangle " + std::to_string(t) +
                      " is degenerate or not CCW (2*area=" + std::to_string(area2) + ")");
  }

  // Edge incidence: interior edges are shared by exactly two triangles and
  // every single-incidence edge must carry exactly one boundary tag.
  std::unordered_map<uint64_t, int> incidence;
  for (const auto& tri : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      int c = ++incidence[edge_key(tri[k], tri[(k + 1) % 3])];
      if (c > 2) throw MeshError("edge shared by more than two triangles");
    }

  std::unordered_map<uint64_t, int> tagged;
  for (const auto& e : mesh.boundary_edges) {
    if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv || e.a == e.b)
      throw MeshError("boundary edge has invalid vertex ids");
    if (++tagged[edge_key(e.a, e.b)] > 1)
      throw MeshError("boundary edge tagged twice");
    auto it = incidence.find(edge_key(e.a, e.b));
    if (it == incidence.end())
      throw MeshError("boundary edge is not a mesh edge");
    if (it->second != 1)
      throw MeshError("tagged edge is interior (incidence 2)");
  }
  for (const auto& [key, count] : incidence)
    if (count == 1 && tagged.find(key) == tagged.end())
      throw MeshError("exterior edge without boundary tag");

  // Periodic pairing: a bijection between two disjoint vertex sets offset by
  // exactly `period` in x1 and aligned in x2.
  if (!mesh.periodic_pairs.empty()) {
    if (!(mesh.period > 0)) throw PeriodicMismatch("periodic mesh without period");
    std::unordered_map<int, int> seen_l, seen_r;
    for (const auto& pr : mesh.periodic_pairs) {
      int l = pr[0], r = pr[1];
      if (l < 0 || l >= nv || r < 0 || r >= nv)
        throw PeriodicMismatch("periodic pair has invalid vertex ids");
      if (++seen_l[l] > 1 || ++seen_r[r] > 1)
        throw PeriodicMismatch("periodic pairing is not a bijection");
      if (seen_r.count(l) || seen_l.count(r))
        throw PeriodicMismatch("vertex appears on both periodic sides");
      const auto& pl = mesh.vertices[l];
      const auto& prv = mesh.vertices[r];
      if (std::abs(prv[0] - pl[0] - mesh.period) > 1e-9 * diam)
        throw PeriodicMismatch("periodic pair offset differs from period");
      if (std::abs(prv[1] - pl[1]) > 1e-9 * diam)
        throw PeriodicMismatch("periodic pair not aligned in x2");
    }
  }
}

// ---------------------------------------------------------------- macro ----

TriangleMesh mesh_macro_channel(const MacroChannelSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1) throw MeshError("channel grid must be at least 1x1");
  GridBuilder gb;
  auto xs = uniform_partition(0.0, spec.length, spec.nx);
  auto top = [&](double x) {
    return spec.top_fn ? spec.top_fn(x) : spec.height;
  };
  std::vector<std::vector<double>> cols(spec.nx + 1);
  for (int i = 0; i <= spec.nx; ++i)
    cols[i] = graded_levels(0.0, top(xs[i]), spec.ny, spec.grade_band,
                            spec.grade_fraction);
  auto vid = gb.patch(xs, cols);

  auto bottom_tag = [&](double xm) {
    return (xm >= spec.slip_begin && xm <= spec.slip_end) ? BoundaryTag::SlipWall
                                                          : BoundaryTag::NoSlipWall;
  };
  gb.tag_run_by_x(row_of(vid, 0), bottom_tag);
  gb.tag_run(row_of(vid, spec.ny), BoundaryTag::Top);
  if (spec.periodic_sides) {
    gb.tag_run(column_of(vid, 0), BoundaryTag::PeriodicLeft);
    gb.tag_run(column_of(vid, spec.nx), BoundaryTag::PeriodicRight);
    for (int j = 0; j <= spec.ny; ++j)
      gb.mesh.periodic_pairs.push_back({vid[0][j], vid[spec.nx][j]});
    gb.mesh.period = spec.length;
    if (spec.top_fn &&
        std::abs(top(xs[0]) - top(xs[spec.nx])) > 1e-9 * spec.length)
      throw PeriodicMismatch("curved top does not close periodically");
  } else {
    gb.tag_run(column_of(vid, 0), BoundaryTag::Inflow);
    gb.tag_run(column_of(vid, spec.nx), BoundaryTag::Outflow);
  }
  return std::move(gb.mesh);
}

namespace {

// Shared three-block backward-facing-step builder. `low_bottom` gives the
// floor of the expanded section (flat 0 for macro, rough wall for DNS).
TriangleMesh build_bfs(double inlet_length, double /*length*/, double height,
                       double step_y, const std::vector<double>& xs_inlet,
                       const std::vector<double>& xs_main,
                       const std::function<double(double)>& low_bottom,
                       int ny_low, int ny_high, double grade_band,
                       double grade_fraction,
                       const std::function<BoundaryTag(double)>& bottom_tag) {
  GridBuilder gb;
  // Shared vertical partitions ensure conforming glue lines.
  std::vector<double> ys_high = uniform_partition(step_y, height, ny_high);

  // Inlet block [0, Li] x [step_y, height].
  std::vector<std::vector<double>> cols_a(xs_inlet.size(), ys_high);
  auto vid_a = gb.patch(xs_inlet, cols_a);

  // Upper main block [Li, L] x [step_y, height].
  std::vector<std::vector<double>> cols_b(xs_main.size(), ys_high);
  auto vid_b = gb.patch(xs_main, cols_b);

  // Lower main block [Li, L] x [bottom(x), step_y].
  std::vector<std::vector<double>> cols_c(xs_main.size());
  for (size_t i = 0; i < xs_main.size(); ++i)
    cols_c[i] = graded_levels(low_bottom(xs_main[i]), step_y, ny_low, grade_band,
                              grade_fraction);
  auto vid_c = gb.patch(xs_main, cols_c);

  const int na = static_cast<int>(xs_inlet.size()) - 1;
  const int nb = static_cast<int>(xs_main.size()) - 1;

  gb.tag_run(column_of(vid_a, 0), BoundaryTag::Inflow);
  gb.tag_run(row_of(vid_a, ny_high), BoundaryTag::Top);
  gb.tag_run(row_of(vid_b, ny_high), BoundaryTag::Top);
  gb.tag_run(row_of(vid_a, 0), BoundaryTag::NoSlipWall); // inlet floor
  gb.tag_run(column_of(vid_c, 0), BoundaryTag::NoSlipWall); // step face
  gb.tag_run_by_x(row_of(vid_c, 0), bottom_tag);
  gb.tag_run(column_of(vid_b, nb), BoundaryTag::Outflow);
  gb.tag_run(column_of(vid_c, nb), BoundaryTag::Outflow);

  (void)inlet_length;
  (void)na;
  return std::move(gb.mesh);
}

} // namespace

TriangleMesh mesh_macro_bfs(const MacroBfsSpec& spec) {
  auto xs_inlet = uniform_partition(0.0, spec.inlet_length, spec.nx_inlet);
  // Main partition keeps grid lines exactly on the slip-window ends.
  std::vector<double> xs_main;
  {
    auto p1 = uniform_partition(spec.inlet_length, spec.slip_begin, spec.nx_pre);
    auto p2 = uniform_partition(spec.slip_begin, spec.slip_end, spec.nx_window);
    auto p3 = uniform_partition(spec.slip_end, spec.length, spec.nx_tail);
    xs_main = p1;
    xs_main.insert(xs_main.end(), p2.begin() + 1, p2.end());
    xs_main.insert(xs_main.end(), p3.begin() + 1, p3.end());
  }
  auto bottom_tag = [&](double xm) {
    return (xm >= spec.slip_begin && xm <= spec.slip_end) ? BoundaryTag::SlipWall
                                                          : BoundaryTag::NoSlipWall;
  };
  return build_bfs(spec.inlet_length, spec.length, spec.height, spec.step_y,
                   xs_inlet, xs_main, [](double) { return 0.0; }, spec.ny_low,
                   spec.ny_high, spec.grade_band, spec.grade_fraction, bottom_tag);
}

// ------------------------------------------------------------------ dns ----

TriangleMesh mesh_rough_dns(const RoughnessProfile& profile,
                            const DnsChannelSpec& spec) {
  if (spec.wall_resolution < 4)
    throw MeshError("DNS wall resolution must be at least 4 cells per period");
  double lam = profile.wavelength();
  int periods = std::max(1, static_cast<int>(std::lround(spec.length / lam)));
  int nx = periods * spec.wall_resolution;
  // Keep at least the requested density when length is not a whole multiple.
  while (nx * lam < spec.length * spec.wall_resolution - 1e-9) ++nx;

  auto xs = uniform_partition(0.0, spec.length, nx);

  std::function<double(double)> wall = [&profile](double x) {
    return profile.wall(x);
  };
  if (spec.periodic_sides) {
    double mismatch = profile.wall(spec.length) - profile.wall(0.0);
    if (std::abs(mismatch) > 1e-9 * profile.epsilon()) {
      if (!spec.seam_blend)
        throw PeriodicMismatch(
            "wall(0) != wall(length); enable seam_blend or use inflow/outflow sides");
      double x0 = spec.length - 2.0 * lam;
      double w0 = profile.wall(0.0);
      wall = [&profile, x0, lam, w0, L = spec.length](double x) {
        double base = profile.wall(x);
        if (x <= x0) return base;
        double u = std::clamp((x - x0) / (2.0 * lam), 0.0, 1.0);
        double s = u * u * (3.0 - 2.0 * u);
        return base + s * (w0 - profile.wall(L));
      };
    }
  }

  auto top = [&](double x) { return spec.top_fn ? spec.top_fn(x) : spec.height; };
  double band = (spec.grade_band > 0) ? spec.grade_band : 4.0 * profile.epsilon();

  GridBuilder gb;
  std::vector<std::vector<double>> cols(nx + 1);
  for (int i = 0; i <= nx; ++i)
    cols[i] = graded_levels(wall(xs[i]), top(xs[i]), spec.ny, band,
                            spec.grade_fraction);
  auto vid = gb.patch(xs, cols);

  gb.tag_run(row_of(vid, 0), BoundaryTag::NoSlipWall);
  gb.tag_run(row_of(vid, spec.ny), BoundaryTag::Top);
  if (spec.periodic_sides) {
    gb.tag_run(column_of(vid, 0), BoundaryTag::PeriodicLeft);
    gb.tag_run(column_of(vid, nx), BoundaryTag::PeriodicRight);
    for (int j = 0; j <= spec.ny; ++j)
      gb.mesh.periodic_pairs.push_back({vid[0][j], vid[nx][j]});
    gb.mesh.period = spec.length;
  } else {
    gb.tag_run(column_of(vid, 0), BoundaryTag::Inflow);
    gb.tag_run(column_of(vid, nx), BoundaryTag::Outflow);
  }
  return std::move(gb.mesh);
}

TriangleMesh mesh_bfs_dns(const RoughnessProfile& profile, const DnsBfsSpec& spec) {
  double lam = profile.wavelength();
  int periods = std::max(1, static_cast<int>(std::lround((spec.rough_end - spec.rough_begin) / lam)));
  int nx_window = periods * spec.wall_resolution;

  auto xs_inlet = uniform_partition(0.0, spec.inlet_length, spec.nx_inlet);
  std::vector<double> xs_main;
  {
    auto p1 = uniform_partition(spec.inlet_length, spec.rough_begin, spec.nx_pre);
    auto p2 = uniform_partition(spec.rough_begin, spec.rough_end, nx_window);
    auto p3 = uniform_partition(spec.rough_end, spec.length, spec.nx_tail);
    xs_main = p1;
    xs_main.insert(xs_main.end(), p2.begin() + 1, p2.end());
    xs_main.insert(xs_main.end(), p3.begin() + 1, p3.end());
  }
  double band = (spec.grade_band > 0) ? spec.grade_band : 4.0 * profile.epsilon();
  return build_bfs(
      spec.inlet_length, spec.length, spec.height, spec.step_y, xs_inlet, xs_main,
      [&profile](double x) { return profile.wall(x); }, spec.ny_low, spec.ny_high,
      band, spec.grade_fraction,
      [](double) { return BoundaryTag::NoSlipWall; });
}

// ---------------------------------------------------------------- micro ----

TriangleMesh mesh_micro(const RoughnessProfile& profile, const MicroMeshSpec& spec) {
  if (!(spec.width > 0) || !(spec.height > 0))
    throw MeshError("micro domain needs positive width and height");
  if (spec.nx < 2) throw MeshError("micro resolution must be at least 2");

  double s = spec.site, L = spec.width, gamma = spec.height;
  double wl = profile.wall(s), wr = profile.wall(s + L);
  if (spec.periodic_sides &&
      std::abs(wl - wr) > 1e-9 * std::max(profile.epsilon(), 1e-12))
    throw PeriodicMismatch("micro side walls differ: wall(s)=" + std::to_string(wl) +
                           " wall(s+L)=" + std::to_string(wr));

  double wmin = profile.wall_min_on(s, s + L);
  double span = gamma - wmin;
  int ny = (spec.ny > 0)
               ? spec.ny
               : std::max(8, static_cast<int>(std::ceil(spec.nx * span / L * 2.0 / 3.0)));
  double band = (spec.grade_band > 0) ? spec.grade_band : gamma / 4.0;

  GridBuilder gb;
  auto xs = uniform_partition(s, s + L, spec.nx);
  std::vector<std::vector<double>> cols(spec.nx + 1);
  for (int i = 0; i <= spec.nx; ++i)
    cols[i] = graded_levels(profile.wall(xs[i]), gamma, ny, band,
                            spec.grade_fraction);
  auto vid = gb.patch(xs, cols);

  gb.tag_run(row_of(vid, 0), BoundaryTag::NoSlipWall);
  gb.tag_run(row_of(vid, ny), BoundaryTag::FreeStreamTop);
  gb.tag_run(column_of(vid, 0), BoundaryTag::MicroLeft);
  gb.tag_run(column_of(vid, spec.nx), BoundaryTag::MicroRight);
  if (spec.periodic_sides) {
    for (int j = 0; j <= ny; ++j)
      gb.mesh.periodic_pairs.push_back({vid[0][j], vid[spec.nx][j]});
    gb.mesh.period = L;
  }
  return std::move(gb.mesh);
}

// ----------------------------------------------------------------- cell ----

TriangleMesh mesh_cell_domain(const UnitCellShape& shape, double y2top,
                              int resolution) {
  double H = shape.height;
  if (y2top < H + 2.0)
    throw TruncationTooLow("cell truncation height " + std::to_string(y2top) +
                           " must be at least H + 2 = " + std::to_string(H + 2.0));
  if (resolution < 4) throw MeshError("cell resolution must be at least 4");

  double phi0 = shape.phi(0.0), phi1 = shape.phi(1.0);
  if (std::abs(phi0 - phi1) > 1e-12)
    throw PeriodicMismatch("unit cell shape has phi(0) != phi(1)");

  // Near-wall block up to H + 1, then absolute marched levels whose schedule
  // is independent of y2top so different truncation heights nest.
  const double band = H + 1.0;
  std::vector<double> upper;
  {
    double d0 = (band + 0.25) / resolution;
    double d = d0, y = band;
    while (true) {
      double next = std::min(d * 1.25, 0.4);
      if (y + next >= y2top - 0.3 * next) break;
      y += next;
      upper.push_back(y);
      d = next;
    }
    upper.push_back(y2top);
  }

  GridBuilder gb;
  auto xs = uniform_partition(0.0, 1.0, resolution);
  std::vector<std::vector<double>> cols(resolution + 1);
  for (int i = 0; i <= resolution; ++i) {
    double lo = shape.phi(xs[i]);
    if (lo < -1e-12 || lo > H + 1e-12)
      throw InvalidProfile("unit cell shape leaves [0, H]");
    auto lower = uniform_partition(lo, band, resolution);
    cols[i] = lower;
    cols[i].insert(cols[i].end(), upper.begin(), upper.end());
  }
  int ny = static_cast<int>(cols[0].size()) - 1;
  auto vid = gb.patch(xs, cols);

  gb.tag_run(row_of(vid, 0), BoundaryTag::NoSlipWall);
  gb.tag_run(row_of(vid, ny), BoundaryTag::Top);
  gb.tag_run(column_of(vid, 0), BoundaryTag::PeriodicLeft);
  gb.tag_run(column_of(vid, resolution), BoundaryTag::PeriodicRight);
  for (int j = 0; j <= ny; ++j)
    gb.mesh.periodic_pairs.push_back({vid[0][j], vid[resolution][j]});
  gb.mesh.period = 1.0;
  return std::move(gb.mesh);
}

// ------------------------------------------------------------------- io ----

void save_mesh_json(const TriangleMesh& mesh, const std::string& path) {
  Json j;
  j["vertices"] = mesh.vertices;
  j["triangles"] = mesh.triangles;
  Json edges = Json::array();
  for (const auto& e : mesh.boundary_edges)
    edges.push_back({e.a, e.b, to_string(e.tag)});
  j["boundary"] = edges;
  j["periodic_pairs"] = mesh.periodic_pairs;
  j["period"] = mesh.period;
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open '" + path + "' for writing");
  out << j.dump(1, '\t') << "\n";
}

TriangleMesh load_mesh_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  Json j;
  in >> j;
  TriangleMesh mesh;
  mesh.vertices = j.at("vertices").get<std::vector<std::array<double, 2>>>();
  mesh.triangles = j.at("triangles").get<std::vector<std::array<int, 3>>>();
  for (const auto& e : j.at("boundary")) {
    TriangleMesh::BoundaryEdge be;
    be.a = e.at(0).get<int>();
    be.b = e.at(1).get<int>();
    be.tag = boundary_tag_from_string(e.at(2).get<std::string>());
    mesh.boundary_edges.push_back(be);
  }
  if (j.contains("periodic_pairs"))
    mesh.periodic_pairs = j.at("periodic_pairs").get<std::vector<std::array<int, 2>>>();
  if (j.contains("period")) mesh.period = j.at("period").get<double>();
  return mesh;
}

} // namespace slipflow
