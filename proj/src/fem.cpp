#include "slipflow/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <unordered_map>

#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>

#include "slipflow/errors.hpp"

namespace slipflow {

namespace detail {

namespace {

uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

} // namespace

// Problem-independent P2/P1 connectivity plus a uniform-bin point locator.
// Owns a copy of the mesh so solutions stay valid after the caller's mesh
// goes away.
struct Space {
  TriangleMesh owned;
  const TriangleMesh* mesh = nullptr;
  int nv = 0, ne = 0, nt = 0;
  std::vector<std::array<int, 2>> edges;    // sorted vertex pairs
  std::vector<std::array<int, 3>> tri_edges; // edge k opposite local vertex k
  std::unordered_map<uint64_t, int> edge_of;
  std::vector<std::array<double, 2>> node_xy; // nv vertex nodes + ne midpoints

  // locator bins
  double bx0 = 0, by0 = 0, bdx = 1, bdy = 1;
  int nxb = 1, nyb = 1;
  std::vector<std::vector<int>> bins;
  double diam = 1;

  Space(const Space&) = delete;
  Space& operator=(const Space&) = delete;

  explicit Space(const TriangleMesh& mesh_in) : owned(mesh_in), mesh(&owned) {
    const TriangleMesh& m = owned;
    nv = static_cast<int>(m.vertices.size());
    nt = static_cast<int>(m.triangles.size());
    tri_edges.resize(nt);
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      for (int k = 0; k < 3; ++k) {
        int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
        uint64_t key = ekey(a, b);
        auto it = edge_of.find(key);
        int e;
        if (it == edge_of.end()) {
          e = static_cast<int>(edges.size());
          edges.push_back({std::min(a, b), std::max(a, b)});
          edge_of.emplace(key, e);
        } else {
          e = it->second;
        }
        tri_edges[t][k] = e;
      }
    }
    ne = static_cast<int>(edges.size());
    node_xy.resize(nv + ne);
    for (int v = 0; v < nv; ++v) node_xy[v] = m.vertices[v];
    for (int e = 0; e < ne; ++e) {
      const auto& pa = m.vertices[edges[e][0]];
      const auto& pb = m.vertices[edges[e][1]];
      node_xy[nv + e] = {0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
    }

    auto bb = m.bounding_box();
    diam = std::hypot(bb[1] - bb[0], bb[3] - bb[2]);
    double w = std::max(bb[1] - bb[0], 1e-12 * diam);
    double h = std::max(bb[3] - bb[2], 1e-12 * diam);
    double scale = std::sqrt(static_cast<double>(nt) / (w * h));
    nxb = std::clamp(static_cast<int>(std::ceil(w * scale)), 1, 4096);
    nyb = std::clamp(static_cast<int>(std::ceil(h * scale)), 1, 4096);
    bx0 = bb[0];
    by0 = bb[2];
    bdx = w / nxb;
    bdy = h / nyb;
    bins.resize(static_cast<size_t>(nxb) * nyb);
    double pad = 1e-12 * diam;
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
      for (int k = 0; k < 3; ++k) {
        const auto& p = m.vertices[tri[k]];
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
      }
      int i0 = bin_x(xmin - pad), i1 = bin_x(xmax + pad);
      int j0 = bin_y(ymin - pad), j1 = bin_y(ymax + pad);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
          bins[static_cast<size_t>(i) * nyb + j].push_back(t);
    }
  }

  int bin_x(double x) const {
    return std::clamp(static_cast<int>((x - bx0) / bdx), 0, nxb - 1);
  }
  int bin_y(double y) const {
    return std::clamp(static_cast<int>((y - by0) / bdy), 0, nyb - 1);
  }

  // Barycentric coordinates of p in triangle t.
  std::array<double, 3> barycentric(int t, double x, double y) const {
    const auto& tri = mesh->triangles[t];
    const auto& p0 = mesh->vertices[tri[0]];
    const auto& p1 = mesh->vertices[tri[1]];
    const auto& p2 = mesh->vertices[tri[2]];
    double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) -
                 (p1[1] - p0[1]) * (p2[0] - p0[0]);
    double l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (y - p0[1]) * (p2[0] - p0[0])) / det;
    double l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (p1[1] - p0[1]) * (x - p0[0])) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  // Containing triangle (lowest index wins on ties); -1 when outside.
  int locate(double x, double y, std::array<double, 3>* bary = nullptr) const {
    const double tol = 1e-9;
    const auto& list = bins[static_cast<size_t>(bin_x(x)) * nyb + bin_y(y)];
    for (int t : list) {
      auto l = barycentric(t, x, y);
      if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) {
        if (bary) *bary = l;
        return t;
      }
    }
    return -1;
  }

  std::array<int, 6> element_nodes(int t) const {
    const auto& tri = mesh->triangles[t];
    const auto& te = tri_edges[t];
    return {tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]};
  }
};

} // namespace detail

namespace {

using detail::Space;
using Triplet = Eigen::Triplet<double>;

constexpr int kVelLocal = 12; // 6 P2 nodes x 2 components
constexpr int kLocal = 15;    // + 3 pressure vertices

// Degree-5 triangle rule (7 points, barycentric), weights sum to 1.
struct TriQuad {
  std::array<std::array<double, 3>, 7> pts;
  std::array<double, 7> w;
};

const TriQuad& tri_rule() {
  static const TriQuad q = [] {
    TriQuad r;
    const double a1 = 0.059715871789770, b1 = 0.470142064105115;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456;
    const double w0 = 0.225;
    const double w1 = 0.132394152788506, w2 = 0.125939180544827;
    r.pts[0] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    r.w[0] = w0;
    r.pts[1] = {a1, b1, b1};
    r.pts[2] = {b1, a1, b1};
    r.pts[3] = {b1, b1, a1};
    r.w[1] = r.w[2] = r.w[3] = w1;
    r.pts[4] = {a2, b2, b2};
    r.pts[5] = {b2, a2, b2};
    r.pts[6] = {b2, b2, a2};
    r.w[4] = r.w[5] = r.w[6] = w2;
    return r;
  }();
  return q;
}

// 1D Gauss rules on [0,1].
struct Gauss1D {
  std::vector<double> x, w;
};

const Gauss1D& gauss3() {
  static const Gauss1D g = {{0.1127016653792583, 0.5, 0.8872983346207417},
                            {5.0 / 18, 8.0 / 18, 5.0 / 18}};
  return g;
}

const Gauss1D& gauss4() {
  static const Gauss1D g = {{0.06943184420297371, 0.33000947820757187,
                             0.6699905217924281, 0.9305681557970263},
                            {0.17392742256872693, 0.3260725774312731,
                             0.3260725774312731, 0.17392742256872693}};
  return g;
}

const Gauss1D& gauss5() {
  static const Gauss1D g = {{0.04691007703066800, 0.23076534494715845, 0.5,
                             0.7692346550528415, 0.9530899229693320},
                            {0.11846344252809454, 0.23931433524968324,
                             0.28444444444444444, 0.23931433524968324,
                             0.11846344252809454}};
  return g;
}

void p2_basis(const std::array<double, 3>& l, double* N) {
  N[0] = l[0] * (2 * l[0] - 1);
  N[1] = l[1] * (2 * l[1] - 1);
  N[2] = l[2] * (2 * l[2] - 1);
  N[3] = 4 * l[1] * l[2];
  N[4] = 4 * l[2] * l[0];
  N[5] = 4 * l[0] * l[1];
}

// Reference gradients w.r.t. (xi, eta) with l = (1-xi-eta, xi, eta).
void p2_grad_ref(const std::array<double, 3>& l, double (*g)[2]) {
  g[0][0] = -(4 * l[0] - 1);
  g[0][1] = -(4 * l[0] - 1);
  g[1][0] = 4 * l[1] - 1;
  g[1][1] = 0;
  g[2][0] = 0;
  g[2][1] = 4 * l[2] - 1;
  g[3][0] = 4 * l[2];
  g[3][1] = 4 * l[1];
  g[4][0] = -4 * l[2];
  g[4][1] = 4 * (l[0] - l[2]);
  g[5][0] = 4 * (l[0] - l[1]);
  g[5][1] = -4 * l[1];
}

struct ElementGeometry {
  double inv_jt[2][2]; // J^{-T}
  double det = 0;
  std::array<double, 2> p0{};
  double j[2][2]; // columns are the edge vectors
};

ElementGeometry element_geometry(const TriangleMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const auto& p0 = mesh.vertices[tri[0]];
  const auto& p1 = mesh.vertices[tri[1]];
  const auto& p2 = mesh.vertices[tri[2]];
  ElementGeometry g;
  g.p0 = p0;
  g.j[0][0] = p1[0] - p0[0];
  g.j[0][1] = p2[0] - p0[0];
  g.j[1][0] = p1[1] - p0[1];
  g.j[1][1] = p2[1] - p0[1];
  g.det = g.j[0][0] * g.j[1][1] - g.j[0][1] * g.j[1][0];
  double inv = 1.0 / g.det;
  // J^{-1} = inv * [[j11, -j01], [-j10, j00]]; transpose for gradient map.
  g.inv_jt[0][0] = inv * g.j[1][1];
  g.inv_jt[0][1] = -inv * g.j[1][0];
  g.inv_jt[1][0] = -inv * g.j[0][1];
  g.inv_jt[1][1] = inv * g.j[0][0];
  return g;
}

// Per-problem dof layout: merged P2/P1 numbering (periodic identification)
// plus strong constraints.
struct SolveLayout {
  std::vector<int> node_rep;  // P2 node -> representative
  std::vector<int> node_dof;  // representative -> compact index
  std::vector<int> vert_rep;  // vertex -> representative
  std::vector<int> vert_dof;
  int n_nodes_m = 0, n_press_m = 0;
  int n_u = 0, n_p = 0, n_total = 0;
  bool gauge = false; // zero-mean: pin one pressure dof, shift after solve

  std::vector<char> fixed;    // per dof (velocity block, then pressure block)
  std::vector<double> fixval;

  struct RobinEdge {
    std::array<int, 3> nodes; // endpoint, endpoint, midpoint (P2 node ids)
    std::array<double, 2> pa, pb;
    const std::function<double(double)>* alpha;
  };
  std::vector<RobinEdge> robin;

  int udof(int node, int c) const { return 2 * node_dof[node_rep[node]] + c; }
  int pdof(int vertex) const { return n_u + vert_dof[vert_rep[vertex]]; }
};

SolveLayout build_layout(const Space& sp, const FlowProblem& pb) {
  const TriangleMesh& mesh = *sp.mesh;
  SolveLayout lay;

  // --- validation: every mesh tag covered exactly once ------------------
  std::set<BoundaryTag> present;
  for (const auto& e : mesh.boundary_edges) present.insert(e.tag);
  std::set<BoundaryTag> covered;
  bool periodic = false;
  for (const auto& bc : pb.bcs) {
    for (auto tag : bc.tags) {
      if (!present.count(tag))
        throw BadBoundarySpec("bc bound to tag '" + to_string(tag) +
                              "' absent from mesh");
      if (covered.count(tag))
        throw BadBoundarySpec("tag '" + to_string(tag) + "' covered twice");
      covered.insert(tag);
    }
    if (bc.kind == VelocityBC::Kind::Periodic) {
      if (periodic) throw BadBoundarySpec("multiple periodic bcs");
      periodic = true;
      if (mesh.periodic_pairs.empty())
        throw BadBoundarySpec("periodic bc on a mesh without periodic pairs");
    }
  }
  for (auto tag : present)
    if (!covered.count(tag))
      throw BadBoundarySpec("tag '" + to_string(tag) + "' not covered by any bc");

  bool has_zero_stress = false;
  for (const auto& bc : pb.bcs)
    if (bc.kind == VelocityBC::Kind::ZeroStress) has_zero_stress = true;
  if (pb.gauge == PressureGauge::None && !has_zero_stress)
    throw GaugeError("no pressure gauge and no zero-stress boundary");
  if (pb.gauge == PressureGauge::ZeroMean && has_zero_stress)
    throw GaugeError("zero-mean gauge is redundant with a zero-stress boundary");

  // --- periodic identification ------------------------------------------
  lay.node_rep.resize(sp.nv + sp.ne);
  lay.vert_rep.resize(sp.nv);
  for (int n = 0; n < sp.nv + sp.ne; ++n) lay.node_rep[n] = n;
  for (int v = 0; v < sp.nv; ++v) lay.vert_rep[v] = v;
  if (periodic) {
    std::unordered_map<int, int> to_left;
    for (const auto& pr : mesh.periodic_pairs) to_left[pr[1]] = pr[0];
    for (const auto& [right, left] : to_left) {
      lay.node_rep[right] = left;
      lay.vert_rep[right] = left;
    }
    // Edges whose both endpoints are paired map onto the matching left edge.
    for (int e = 0; e < sp.ne; ++e) {
      auto [a, b] = sp.edges[e];
      auto ia = to_left.find(a), ib = to_left.find(b);
      if (ia == to_left.end() || ib == to_left.end()) continue;
      auto it = sp.edge_of.find(detail::ekey(ia->second, ib->second));
      if (it == sp.edge_of.end())
        throw PeriodicMismatch("periodic image of a side edge is missing");
      lay.node_rep[sp.nv + e] = sp.nv + it->second;
    }
  }
  lay.node_dof.assign(sp.nv + sp.ne, -1);
  lay.vert_dof.assign(sp.nv, -1);
  for (int n = 0; n < sp.nv + sp.ne; ++n)
    if (lay.node_rep[n] == n) lay.node_dof[n] = lay.n_nodes_m++;
  for (int v = 0; v < sp.nv; ++v)
    if (lay.vert_rep[v] == v) lay.vert_dof[v] = lay.n_press_m++;

  lay.n_u = 2 * lay.n_nodes_m;
  lay.n_p = lay.n_press_m;
  lay.gauge = (pb.gauge == PressureGauge::ZeroMean);
  lay.n_total = lay.n_u + lay.n_p;

  // --- strong constraints -------------------------------------------------
  lay.fixed.assign(lay.n_total, 0);
  lay.fixval.assign(lay.n_total, 0.0);
  // A zero-mean gauge is imposed by pinning one pressure dof (a multiplier
  // row would be dense and ruin the sparse factorization); the constant is
  // restored after the solve.
  if (lay.gauge) lay.fixed[lay.n_u] = 1;

  auto edge_node = [&](int a, int b) {
    return sp.nv + sp.edge_of.at(detail::ekey(a, b));
  };
  auto fix = [&](int node, int c, double value) {
    int d = lay.udof(node, c);
    lay.fixed[d] = 1;
    lay.fixval[d] = value;
  };

  // Component constraints (u2 = 0) first so full Dirichlet can override at
  // shared corners.
  for (const auto& bc : pb.bcs) {
    if (bc.kind != VelocityBC::Kind::SlipRobin &&
        bc.kind != VelocityBC::Kind::FreeSlip)
      continue;
    for (const auto& be : mesh.boundary_edges) {
      if (std::find(bc.tags.begin(), bc.tags.end(), be.tag) == bc.tags.end())
        continue;
      const auto& pa = mesh.vertices[be.a];
      const auto& pb2 = mesh.vertices[be.b];
      double len = std::hypot(pb2[0] - pa[0], pb2[1] - pa[1]);
      if (std::abs(pb2[1] - pa[1]) > 1e-9 * std::max(len, 1.0))
        throw BadBoundarySpec("slip/free-slip boundary must be horizontal");
      int mid = edge_node(be.a, be.b);
      fix(be.a, 1, 0.0);
      fix(be.b, 1, 0.0);
      fix(mid, 1, 0.0);
      if (bc.kind == VelocityBC::Kind::SlipRobin) {
        if (!bc.slip) throw BadBoundarySpec("slip-robin bc without slip function");
        lay.robin.push_back({{be.a, be.b, mid}, pa, pb2, &bc.slip});
      }
    }
  }
  for (const auto& bc : pb.bcs) {
    if (bc.kind != VelocityBC::Kind::Dirichlet) continue;
    if (!bc.value) throw BadBoundarySpec("dirichlet bc without value function");
    for (const auto& be : mesh.boundary_edges) {
      if (std::find(bc.tags.begin(), bc.tags.end(), be.tag) == bc.tags.end())
        continue;
      int mid = edge_node(be.a, be.b);
      for (int node : {be.a, be.b, mid}) {
        auto xy = sp.node_xy[node];
        auto val = bc.value(xy[0], xy[1]);
        fix(node, 0, val[0]);
        fix(node, 1, val[1]);
      }
    }
  }
  return lay;
}

struct AssembleOutput {
  Eigen::VectorXd residual;
  std::vector<Triplet> triplets; // empty unless jacobian requested
};

// Assembles the nonlinear residual (and optionally the Newton matrix) of the
// stationary system at state X. Constrained rows/columns are eliminated
// (identity rows, zero residual) so Newton increments vanish there.
void assemble(const Space& sp, const FlowProblem& pb, const SolveLayout& lay,
              double nu, const Eigen::VectorXd& X, bool convection,
              bool jacobian, AssembleOutput& out) {
  const TriangleMesh& mesh = *sp.mesh;
  const TriQuad& q = tri_rule();

  out.residual.setZero(lay.n_total);
  out.triplets.clear();
  if (jacobian) out.triplets.reserve(static_cast<size_t>(sp.nt) * 240 + lay.n_u);

  // Static reference basis tables at the quadrature points.
  static thread_local double Nq[7][6];
  static thread_local double Gq[7][6][2];
  static thread_local bool tables_ready = false;
  if (!tables_ready) {
    for (int k = 0; k < 7; ++k) {
      p2_basis(q.pts[k], Nq[k]);
      double g[6][2];
      p2_grad_ref(q.pts[k], g);
      for (int i = 0; i < 6; ++i) {
        Gq[k][i][0] = g[i][0];
        Gq[k][i][1] = g[i][1];
      }
    }
    tables_ready = true;
  }

  double r_loc[kLocal];
  double j_loc[kLocal][kLocal];
  int gdof[kLocal];

  for (int t = 0; t < sp.nt; ++t) {
    auto geo = element_geometry(mesh, t);
    auto nodes = sp.element_nodes(t);
    const auto& tri = mesh.triangles[t];

    double uloc[6][2];
    double ploc[3];
    for (int i = 0; i < 6; ++i) {
      uloc[i][0] = X[lay.udof(nodes[i], 0)];
      uloc[i][1] = X[lay.udof(nodes[i], 1)];
    }
    for (int k = 0; k < 3; ++k) ploc[k] = X[lay.pdof(tri[k])];

    for (int i = 0; i < kLocal; ++i) r_loc[i] = 0;
    if (jacobian)
      for (int i = 0; i < kLocal; ++i)
        for (int j = 0; j < kLocal; ++j) j_loc[i][j] = 0;

    for (int k = 0; k < 7; ++k) {
      double w = q.w[k] * 0.5 * geo.det; // reference area 1/2
      const auto& l = q.pts[k];

      double gN[6][2];
      for (int i = 0; i < 6; ++i) {
        gN[i][0] = geo.inv_jt[0][0] * Gq[k][i][0] + geo.inv_jt[0][1] * Gq[k][i][1];
        gN[i][1] = geo.inv_jt[1][0] * Gq[k][i][0] + geo.inv_jt[1][1] * Gq[k][i][1];
      }
      const double* N = Nq[k];

      double u[2] = {0, 0};
      double gu[2][2] = {{0, 0}, {0, 0}};
      for (int i = 0; i < 6; ++i)
        for (int c = 0; c < 2; ++c) {
          u[c] += N[i] * uloc[i][c];
          gu[c][0] += uloc[i][c] * gN[i][0];
          gu[c][1] += uloc[i][c] * gN[i][1];
        }
      double p = l[0] * ploc[0] + l[1] * ploc[1] + l[2] * ploc[2];
      double divu = gu[0][0] + gu[1][1];

      double xq = geo.p0[0] + geo.j[0][0] * l[1] + geo.j[0][1] * l[2];
      double yq = geo.p0[1] + geo.j[1][0] * l[1] + geo.j[1][1] * l[2];
      double f[2] = {pb.body_force[0], pb.body_force[1]};
      if (pb.force_fn) {
        auto fv = pb.force_fn(xq, yq);
        f[0] += fv[0];
        f[1] += fv[1];
      }

      double conv[2] = {0, 0};
      if (convection) {
        conv[0] = u[0] * gu[0][0] + u[1] * gu[0][1];
        conv[1] = u[0] * gu[1][0] + u[1] * gu[1][1];
      }

      for (int i = 0; i < 6; ++i)
        for (int c = 0; c < 2; ++c) {
          double r = nu * (gN[i][0] * gu[c][0] + gN[i][1] * gu[c][1]) -
                     p * gN[i][c] - f[c] * N[i];
          if (convection) r += N[i] * conv[c];
          r_loc[2 * i + c] += w * r;
        }
      for (int k2 = 0; k2 < 3; ++k2) r_loc[12 + k2] -= w * l[k2] * divu;

      if (jacobian) {
        double ugN[6];
        for (int j = 0; j < 6; ++j) ugN[j] = u[0] * gN[j][0] + u[1] * gN[j][1];
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) {
            double lap = nu * (gN[i][0] * gN[j][0] + gN[i][1] * gN[j][1]);
            if (convection) {
              double adv = N[i] * ugN[j];
              for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) {
                  double v = (c == d) ? lap + adv : 0.0;
                  v += N[i] * N[j] * gu[c][d];
                  j_loc[2 * i + c][2 * j + d] += w * v;
                }
            } else {
              j_loc[2 * i][2 * j] += w * lap;
              j_loc[2 * i + 1][2 * j + 1] += w * lap;
            }
          }
        for (int i = 0; i < 6; ++i)
          for (int k2 = 0; k2 < 3; ++k2)
            for (int c = 0; c < 2; ++c) {
              double v = -w * l[k2] * gN[i][c];
              j_loc[2 * i + c][12 + k2] += v;
              j_loc[12 + k2][2 * i + c] += v;
            }
      }
    }

    for (int i = 0; i < 6; ++i) {
      gdof[2 * i] = lay.udof(nodes[i], 0);
      gdof[2 * i + 1] = lay.udof(nodes[i], 1);
    }
    for (int k2 = 0; k2 < 3; ++k2) gdof[12 + k2] = lay.pdof(tri[k2]);

    for (int i = 0; i < kLocal; ++i) {
      bool row_fixed = lay.fixed[gdof[i]];
      if (!row_fixed) out.residual[gdof[i]] += r_loc[i];
      if (!jacobian) continue;
      // Zero-valued entries are kept so the pattern is identical for every
      // factorization of a problem (the symbolic analysis is reused).
      for (int j = 0; j < kLocal; ++j) {
        if (row_fixed || lay.fixed[gdof[j]]) continue;
        out.triplets.emplace_back(gdof[i], gdof[j], j_loc[i][j]);
      }
    }
  }

  // Robin slip term: (nu/alpha) u1 v1 on horizontal wall edges.
  const Gauss1D& ge = gauss4();
  for (const auto& re : lay.robin) {
    double len = std::hypot(re.pb[0] - re.pa[0], re.pb[1] - re.pa[1]);
    int d[3] = {lay.udof(re.nodes[0], 0), lay.udof(re.nodes[1], 0),
                lay.udof(re.nodes[2], 0)};
    double uv[3] = {X[d[0]], X[d[1]], X[d[2]]};
    for (size_t k = 0; k < ge.x.size(); ++k) {
      double tq = ge.x[k];
      double x1 = re.pa[0] + tq * (re.pb[0] - re.pa[0]);
      double alpha = (*re.alpha)(x1);
      if (!(alpha > 0))
        throw NonPositiveSlip("slip coefficient not positive at x1=" +
                              std::to_string(x1));
      double coef = ge.w[k] * len * nu / alpha;
      double N[3] = {(1 - tq) * (1 - 2 * tq), tq * (2 * tq - 1), 4 * tq * (1 - tq)};
      double uh = N[0] * uv[0] + N[1] * uv[1] + N[2] * uv[2];
      for (int i = 0; i < 3; ++i) {
        if (lay.fixed[d[i]]) continue;
        out.residual[d[i]] += coef * uh * N[i];
        if (jacobian)
          for (int j = 0; j < 3; ++j) {
            if (lay.fixed[d[j]]) continue;
            out.triplets.emplace_back(d[i], d[j], coef * N[i] * N[j]);
          }
      }
    }
  }

  if (jacobian)
    for (int dof = 0; dof < lay.n_total; ++dof)
      if (lay.fixed[dof]) out.triplets.emplace_back(dof, dof, 1.0);
}

// Max-norm of the discrete continuity residual (gauge multiplier excluded).
double divergence_residual(const Space& sp, const SolveLayout& lay,
                           const Eigen::VectorXd& X) {
  const TriQuad& q = tri_rule();
  Eigen::VectorXd rp = Eigen::VectorXd::Zero(lay.n_p);
  for (int t = 0; t < sp.nt; ++t) {
    auto geo = element_geometry(*sp.mesh, t);
    auto nodes = sp.element_nodes(t);
    const auto& tri = sp.mesh->triangles[t];
    for (int k = 0; k < 7; ++k) {
      double w = q.w[k] * 0.5 * geo.det;
      double g[6][2];
      p2_grad_ref(q.pts[k], g);
      double divu = 0;
      for (int i = 0; i < 6; ++i) {
        double gx = geo.inv_jt[0][0] * g[i][0] + geo.inv_jt[0][1] * g[i][1];
        double gy = geo.inv_jt[1][0] * g[i][0] + geo.inv_jt[1][1] * g[i][1];
        divu += X[lay.udof(nodes[i], 0)] * gx + X[lay.udof(nodes[i], 1)] * gy;
      }
      for (int k2 = 0; k2 < 3; ++k2)
        rp[lay.pdof(tri[k2]) - lay.n_u] += w * q.pts[k][k2] * divu;
    }
  }
  return rp.lpNorm<Eigen::Infinity>();
}

struct RawSolution {
  std::shared_ptr<const Space> space;
  Eigen::VectorXd u_node;
  Eigen::VectorXd p_vertex;
  SolveStats stats;
};

class StationarySolver {
public:
  StationarySolver(const FlowProblem& pb, const SolverOptions& opts)
      : pb_(pb), opts_(opts) {
    if (!pb.mesh) throw BadBoundarySpec("flow problem has no mesh");
    space_ = std::make_shared<Space>(*pb.mesh);
    lay_ = build_layout(*space_, pb);
    X_ = Eigen::VectorXd::Zero(lay_.n_total);
    for (int d = 0; d < lay_.n_u; ++d)
      if (lay_.fixed[d]) X_[d] = lay_.fixval[d];
  }

  RawSolution run(bool navier_stokes) {
    AssembleOutput out;

    assemble(*space_, pb_, lay_, pb_.nu, X_, false, false, out);
    double r_scale = out.residual.norm();
    if (r_scale < 1e-300) {
      // No driving data at all; the zero state is the solution.
      return finalize({0, 0.0, divergence_residual(*space_, lay_, X_), 0.0});
    }

    std::vector<double> stages{1.0};
    if (navier_stokes && opts_.continuation_start > 1.0) {
      stages.clear();
      double f = opts_.continuation_start;
      while (f > 1.0) {
        stages.push_back(f);
        f /= 2.0;
      }
      stages.push_back(1.0);
    }

    int total_newton = 0;
    double rel = 0;
    bool first_stage = true;
    for (double factor : stages) {
      double nu_eff = pb_.nu * factor;
      if (first_stage) {
        // Stokes solve as the initial guess.
        assemble(*space_, pb_, lay_, nu_eff, X_, false, true, out);
        factorize(out.triplets);
        Eigen::VectorXd dx = solve(-out.residual);
        X_ += dx;
        first_stage = false;
      }
      if (!navier_stokes) break;
      rel = newton(nu_eff, r_scale, total_newton);
    }

    if (!navier_stokes) {
      assemble(*space_, pb_, lay_, pb_.nu, X_, false, false, out);
      rel = out.residual.norm() / r_scale;
    }

    SolveStats stats;
    stats.newton_iters = total_newton;
    stats.residual = rel;
    stats.divergence = divergence_residual(*space_, lay_, X_);
    for (int d = 0; d < lay_.n_u; ++d)
      stats.velocity_scale = std::max(stats.velocity_scale, std::abs(X_[d]));
    return finalize(stats);
  }

private:
  RawSolution finalize(SolveStats stats) const {
    RawSolution raw;
    raw.space = space_;
    raw.u_node.resize(2 * (space_->nv + space_->ne));
    for (int n = 0; n < space_->nv + space_->ne; ++n) {
      raw.u_node[2 * n] = X_[lay_.udof(n, 0)];
      raw.u_node[2 * n + 1] = X_[lay_.udof(n, 1)];
    }
    raw.p_vertex.resize(space_->nv);
    for (int v = 0; v < space_->nv; ++v) raw.p_vertex[v] = X_[lay_.pdof(v)];
    if (lay_.gauge) {
      // Restore the zero-mean normalization dropped by the pressure pin.
      double num = 0, den = 0;
      for (int t = 0; t < space_->nt; ++t) {
        const auto& tri = space_->mesh->triangles[t];
        double area = 0.5 * element_geometry(*space_->mesh, t).det;
        num += area / 3.0 *
               (raw.p_vertex[tri[0]] + raw.p_vertex[tri[1]] + raw.p_vertex[tri[2]]);
        den += area;
      }
      raw.p_vertex.array() -= num / den;
    }
    raw.stats = stats;
    return raw;
  }

  double newton(double nu_eff, double r_scale, int& total_newton) {
    AssembleOutput out;
    assemble(*space_, pb_, lay_, nu_eff, X_, true, false, out);
    double rn = out.residual.norm();
    for (int it = 0; it < opts_.newton_max_iter; ++it) {
      if (!std::isfinite(rn)) throw NewtonDivergence("residual is not finite");
      if (rn <= opts_.newton_tol * r_scale) return rn / r_scale;
      assemble(*space_, pb_, lay_, nu_eff, X_, true, true, out);
      factorize(out.triplets);
      Eigen::VectorXd dx = solve(-out.residual);
      Eigen::VectorXd x_full = X_ + dx;
      AssembleOutput trial;
      assemble(*space_, pb_, lay_, nu_eff, x_full, true, false, trial);
      double rfull = trial.residual.norm();
      if (std::isfinite(rfull) && rfull <= rn) {
        X_.swap(x_full);
        rn = rfull;
      } else {
        // Single halving retry on residual increase.
        Eigen::VectorXd x_half = X_ + 0.5 * dx;
        assemble(*space_, pb_, lay_, nu_eff, x_half, true, false, trial);
        double rhalf = trial.residual.norm();
        if (!std::isfinite(rhalf)) throw NewtonDivergence("residual is not finite");
        if (rhalf < rfull || !std::isfinite(rfull)) {
          X_.swap(x_half);
          rn = rhalf;
        } else {
          X_.swap(x_full);
          rn = rfull;
        }
      }
      ++total_newton;
    }
    if (rn > opts_.newton_tol * r_scale)
      throw NewtonDivergence("newton did not reach tolerance " +
                             std::to_string(opts_.newton_tol) + " within " +
                             std::to_string(opts_.newton_max_iter) +
                             " iterations (relative residual " +
                             std::to_string(rn / r_scale) + ")");
    return rn / r_scale;
  }

  void factorize(const std::vector<Triplet>& trips) {
    // The factorization keeps pointers into J_, so it must outlive solve().
    J_.resize(lay_.n_total, lay_.n_total);
    J_.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed_) {
      solver_.analyzePattern(J_);
      analyzed_ = true;
    }
    solver_.factorize(J_);
    if (solver_.info() != Eigen::Success)
      throw SingularSystem("sparse factorization failed (umfpack status " +
                           std::to_string(solver_.umfpackFactorizeReturncode()) + ")");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success)
      throw SingularSystem("sparse solve failed");
    return x;
  }

  const FlowProblem& pb_;
  SolverOptions opts_;
  std::shared_ptr<Space> space_;
  SolveLayout lay_;
  Eigen::VectorXd X_;
  Eigen::SparseMatrix<double> J_;
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> solver_;
  bool analyzed_ = false;
};

} // namespace

// ------------------------------------------------------------ public api ----

VelocityBC dirichlet_bc(BoundaryTag tag,
                        std::function<std::array<double, 2>(double, double)> value) {
  VelocityBC bc;
  bc.kind = VelocityBC::Kind::Dirichlet;
  bc.tags = {tag};
  bc.value = std::move(value);
  return bc;
}

VelocityBC noslip_bc(BoundaryTag tag) {
  return dirichlet_bc(tag, [](double, double) {
    return std::array<double, 2>{0.0, 0.0};
  });
}

VelocityBC periodic_bc(BoundaryTag left, BoundaryTag right) {
  VelocityBC bc;
  bc.kind = VelocityBC::Kind::Periodic;
  bc.tags = {left, right};
  return bc;
}

VelocityBC slip_robin_bc(BoundaryTag tag, std::function<double(double)> alpha) {
  VelocityBC bc;
  bc.kind = VelocityBC::Kind::SlipRobin;
  bc.tags = {tag};
  bc.slip = std::move(alpha);
  return bc;
}

VelocityBC free_slip_bc(BoundaryTag tag) {
  VelocityBC bc;
  bc.kind = VelocityBC::Kind::FreeSlip;
  bc.tags = {tag};
  return bc;
}

VelocityBC zero_stress_bc(BoundaryTag tag) {
  VelocityBC bc;
  bc.kind = VelocityBC::Kind::ZeroStress;
  bc.tags = {tag};
  return bc;
}

FlowSolution solve_stationary(const FlowProblem& problem, const SolverOptions& opts) {
  StationarySolver solver(problem, opts);
  RawSolution raw = solver.run(true);
  FlowSolution sol;
  sol.space_ = std::move(raw.space);
  sol.u_node_ = std::move(raw.u_node);
  sol.p_vertex_ = std::move(raw.p_vertex);
  sol.stats_ = raw.stats;
  return sol;
}

FlowSolution solve_stokes(const FlowProblem& problem, const SolverOptions& opts) {
  StationarySolver solver(problem, opts);
  RawSolution raw = solver.run(false);
  FlowSolution sol;
  sol.space_ = std::move(raw.space);
  sol.u_node_ = std::move(raw.u_node);
  sol.p_vertex_ = std::move(raw.p_vertex);
  sol.stats_ = raw.stats;
  return sol;
}

const TriangleMesh& FlowSolution::mesh() const { return *space_->mesh; }

namespace {

int locate_or_throw(const Space& sp, double x, double y,
                    std::array<double, 3>& bary) {
  int t = sp.locate(x, y, &bary);
  if (t < 0)
    throw PointOutsideMesh("(" + std::to_string(x) + ", " + std::to_string(y) +
                           ") is outside the mesh");
  return t;
}

} // namespace

std::array<double, 2> FlowSolution::velocity(double x, double y) const {
  std::array<double, 3> l;
  int t = locate_or_throw(*space_, x, y, l);
  double N[6];
  p2_basis(l, N);
  auto nodes = space_->element_nodes(t);
  std::array<double, 2> u = {0, 0};
  for (int i = 0; i < 6; ++i) {
    u[0] += N[i] * u_node_[2 * nodes[i]];
    u[1] += N[i] * u_node_[2 * nodes[i] + 1];
  }
  return u;
}

std::array<std::array<double, 2>, 2> FlowSolution::velocity_gradient(double x,
                                                                     double y) const {
  std::array<double, 3> l;
  int t = locate_or_throw(*space_, x, y, l);
  auto geo = element_geometry(*space_->mesh, t);
  double g[6][2];
  p2_grad_ref(l, g);
  auto nodes = space_->element_nodes(t);
  std::array<std::array<double, 2>, 2> gu = {{{0, 0}, {0, 0}}};
  for (int i = 0; i < 6; ++i) {
    double gx = geo.inv_jt[0][0] * g[i][0] + geo.inv_jt[0][1] * g[i][1];
    double gy = geo.inv_jt[1][0] * g[i][0] + geo.inv_jt[1][1] * g[i][1];
    for (int c = 0; c < 2; ++c) {
      double uc = u_node_[2 * nodes[i] + c];
      gu[c][0] += uc * gx;
      gu[c][1] += uc * gy;
    }
  }
  return gu;
}

double FlowSolution::pressure(double x, double y) const {
  std::array<double, 3> l;
  int t = locate_or_throw(*space_, x, y, l);
  const auto& tri = space_->mesh->triangles[t];
  return l[0] * p_vertex_[tri[0]] + l[1] * p_vertex_[tri[1]] +
         l[2] * p_vertex_[tri[2]];
}

double eval_field(const FlowSolution& sol, Field field, double x, double y) {
  switch (field) {
    case Field::U1: return sol.velocity(x, y)[0];
    case Field::U2: return sol.velocity(x, y)[1];
    case Field::Pressure: return sol.pressure(x, y);
    case Field::DU1DX1: return sol.velocity_gradient(x, y)[0][0];
    case Field::DU1DX2: return sol.velocity_gradient(x, y)[0][1];
    case Field::DU2DX1: return sol.velocity_gradient(x, y)[1][0];
    case Field::DU2DX2: return sol.velocity_gradient(x, y)[1][1];
  }
  throw Error("InternalError", "unhandled field");
}

namespace {

// Breakpoints where the segment from a to b (axis-aligned) crosses element
// edges; the integral is then piecewise smooth between consecutive points.
std::vector<double> segment_breakpoints(const Space& sp, std::array<double, 2> a,
                                        std::array<double, 2> b) {
  bool horizontal = std::abs(b[1] - a[1]) <= std::abs(b[0] - a[0]);
  double lo = horizontal ? std::min(a[0], b[0]) : std::min(a[1], b[1]);
  double hi = horizontal ? std::max(a[0], b[0]) : std::max(a[1], b[1]);
  double level = horizontal ? a[1] : a[0];

  std::vector<int> cands;
  {
    std::vector<char> seen(sp.nt, 0);
    int i0 = sp.bin_x(horizontal ? lo : level), i1 = sp.bin_x(horizontal ? hi : level);
    int j0 = sp.bin_y(horizontal ? level : lo), j1 = sp.bin_y(horizontal ? level : hi);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        for (int t : sp.bins[static_cast<size_t>(i) * sp.nyb + j])
          if (!seen[t]) {
            seen[t] = 1;
            cands.push_back(t);
          }
  }

  std::vector<double> cuts = {lo, hi};
  for (int t : cands) {
    const auto& tri = sp.mesh->triangles[t];
    for (int k = 0; k < 3; ++k) {
      const auto& p = sp.mesh->vertices[tri[k]];
      const auto& r = sp.mesh->vertices[tri[(k + 1) % 3]];
      double pc = horizontal ? p[1] : p[0];
      double rc = horizontal ? r[1] : r[0];
      double pt = horizontal ? p[0] : p[1];
      double rt = horizontal ? r[0] : r[1];
      if (pc == level && rc == level) {
        cuts.push_back(pt);
        cuts.push_back(rt);
      } else if ((pc - level) * (rc - level) <= 0 && pc != rc) {
        cuts.push_back(pt + (level - pc) / (rc - pc) * (rt - pt));
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out;
  double tol = 1e-13 * std::max(1.0, hi - lo) + 1e-300;
  for (double c : cuts) {
    if (c < lo - tol || c > hi + tol) continue;
    c = std::clamp(c, lo, hi);
    if (out.empty() || c - out.back() > tol) out.push_back(c);
  }
  if (out.size() < 2) out = {lo, hi};
  return out;
}

double integrate_segment(const FlowSolution& sol, Field field,
                         std::array<double, 2> a, std::array<double, 2> b,
                         const std::function<double(double)>* kernel,
                         double kernel_lo, double kernel_len) {
  const Space& sp = sol.space();
  bool horizontal = std::abs(b[1] - a[1]) <= std::abs(b[0] - a[0]);
  if (std::abs(b[1] - a[1]) > 1e-12 && std::abs(b[0] - a[0]) > 1e-12)
    throw SegmentOutsideMesh("segment integrals require axis-aligned segments");

  auto cuts = segment_breakpoints(sp, a, b);
  const Gauss1D& g = kernel ? gauss5() : gauss3();
  double total = 0;
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    double t0 = cuts[s], t1 = cuts[s + 1];
    double len = t1 - t0;
    if (len <= 0) continue;
    for (size_t k = 0; k < g.x.size(); ++k) {
      double t = t0 + g.x[k] * len;
      double x = horizontal ? t : a[0];
      double y = horizontal ? a[1] : t;
      double v;
      try {
        v = eval_field(sol, field, x, y);
      } catch (const PointOutsideMesh&) {
        throw SegmentOutsideMesh("segment leaves the mesh at (" +
                                 std::to_string(x) + ", " + std::to_string(y) + ")");
      }
      double wgt = g.w[k] * len;
      if (kernel) wgt *= (*kernel)((t - kernel_lo) / kernel_len) / kernel_len;
      total += wgt * v;
    }
  }
  return total;
}

} // namespace

double line_average(const FlowSolution& sol, Field field, double x, double y,
                    double length) {
  if (!(length > 0)) throw SegmentOutsideMesh("segment length must be positive");
  double integral =
      integrate_segment(sol, field, {x, y}, {x + length, y}, nullptr, 0, 1);
  return integral / length;
}

double segment_average(const FlowSolution& sol, Field field, double x0, double y0,
                       double x1, double y1) {
  double len = std::hypot(x1 - x0, y1 - y0);
  if (!(len > 0)) throw SegmentOutsideMesh("segment length must be positive");
  double lo0 = std::min(x0, x1), lo1 = std::min(y0, y1);
  double hi0 = std::max(x0, x1), hi1 = std::max(y0, y1);
  double integral =
      integrate_segment(sol, field, {lo0, lo1}, {hi0, hi1}, nullptr, 0, 1);
  return integral / len;
}

double line_average(const std::function<double(double, double)>& field, double x,
                    double y, double length) {
  if (!(length > 0)) throw SegmentOutsideMesh("segment length must be positive");
  const Gauss1D& g = gauss5();
  const int panels = 256;
  double total = 0;
  double h = length / panels;
  for (int s = 0; s < panels; ++s) {
    double t0 = x + s * h;
    for (size_t k = 0; k < g.x.size(); ++k)
      total += g.w[k] * h * field(t0 + g.x[k] * h, y);
  }
  return total / length;
}

namespace {

double kernel_mass(const std::function<double(double)>& kernel) {
  const Gauss1D& g = gauss5();
  const int panels = 128;
  double total = 0;
  double h = 1.0 / panels;
  for (int s = 0; s < panels; ++s)
    for (size_t k = 0; k < g.x.size(); ++k)
      total += g.w[k] * h * kernel((s + g.x[k]) * h);
  return total;
}

void check_kernel(const std::function<double(double)>& kernel) {
  double mass = kernel_mass(kernel);
  if (std::abs(mass - 1.0) > 1e-8)
    throw KernelNotNormalized("kernel mass on [0,1] is " + std::to_string(mass));
}

} // namespace

double kernel_average(const FlowSolution& sol, Field field, double x, double y,
                      double length, const std::function<double(double)>& kernel) {
  if (!(length > 0)) throw SegmentOutsideMesh("segment length must be positive");
  check_kernel(kernel);
  return integrate_segment(sol, field, {x, y}, {x + length, y}, &kernel, x, length);
}

double kernel_average(const std::function<double(double, double)>& field, double x,
                      double y, double length,
                      const std::function<double(double)>& kernel) {
  if (!(length > 0)) throw SegmentOutsideMesh("segment length must be positive");
  check_kernel(kernel);
  const Gauss1D& g = gauss5();
  const int panels = 256;
  double total = 0;
  double h = length / panels;
  for (int s = 0; s < panels; ++s) {
    double t0 = x + s * h;
    for (size_t k = 0; k < g.x.size(); ++k) {
      double t = t0 + g.x[k] * h;
      total += g.w[k] * h * kernel((t - x) / length) / length * field(t, y);
    }
  }
  return total;
}

std::function<double(double)> bump_kernel() {
  // c * (t(1-t))^3 with c = 140 so the mass on [0,1] is exactly one.
  return [](double t) {
    if (t <= 0 || t >= 1) return 0.0;
    double s = t * (1.0 - t);
    return 140.0 * s * s * s;
  };
}

double boundary_average(const FlowSolution& sol, BoundaryTag tag, Field field) {
  if (field != Field::U1 && field != Field::U2)
    throw Error("InternalError", "boundary_average supports velocity components only");
  int comp = (field == Field::U1) ? 0 : 1;
  const Space& sp = sol.space();
  const TriangleMesh& mesh = *sp.mesh;
  const Gauss1D& g = gauss3();
  double total = 0, total_len = 0;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag != tag) continue;
    const auto& pa = mesh.vertices[be.a];
    const auto& pb = mesh.vertices[be.b];
    double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
    int mid = sp.nv + sp.edge_of.at(detail::ekey(be.a, be.b));
    double ua = sol.node_velocity()[2 * be.a + comp];
    double ub = sol.node_velocity()[2 * be.b + comp];
    double um = sol.node_velocity()[2 * mid + comp];
    for (size_t k = 0; k < g.x.size(); ++k) {
      double t = g.x[k];
      double uh = ua * (1 - t) * (1 - 2 * t) + ub * t * (2 * t - 1) +
                  um * 4 * t * (1 - t);
      total += g.w[k] * len * uh;
    }
    total_len += len;
  }
  if (total_len <= 0)
    throw BadBoundarySpec("no boundary edges with tag '" + to_string(tag) + "'");
  return total / total_len;
}

double velocity_l2_error(
    const FlowSolution& sol,
    const std::function<std::array<double, 2>(double, double)>& exact) {
  const Space& sp = sol.space();
  const TriQuad& q = tri_rule();
  double err2 = 0;
  for (int t = 0; t < sp.nt; ++t) {
    auto geo = element_geometry(*sp.mesh, t);
    auto nodes = sp.element_nodes(t);
    for (int k = 0; k < 7; ++k) {
      const auto& l = q.pts[k];
      double N[6];
      p2_basis(l, N);
      double u[2] = {0, 0};
      for (int i = 0; i < 6; ++i) {
        u[0] += N[i] * sol.node_velocity()[2 * nodes[i]];
        u[1] += N[i] * sol.node_velocity()[2 * nodes[i] + 1];
      }
      double xq = geo.p0[0] + geo.j[0][0] * l[1] + geo.j[0][1] * l[2];
      double yq = geo.p0[1] + geo.j[1][0] * l[1] + geo.j[1][1] * l[2];
      auto ue = exact(xq, yq);
      double dx = u[0] - ue[0], dy = u[1] - ue[1];
      err2 += q.w[k] * 0.5 * geo.det * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(err2);
}

} // namespace slipflow
