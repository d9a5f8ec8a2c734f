#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "slipflow/errors.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/mesh.hpp"

using namespace slipflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::set<BoundaryTag> tag_set(const TriangleMesh& mesh) {
  std::set<BoundaryTag> tags;
  for (const auto& e : mesh.boundary_edges)
    tags.insert(e.tag);
  return tags;
}
} // namespace

TEST_CASE("macro channel: audit, exact count, tags") {
  MacroChannelSpec spec; // 40x40 unit channel
  const TriangleMesh mesh = mesh_macro_channel(spec);
  audit_mesh(mesh);
  CHECK(mesh.cell_count() == 3200); // 2 * 40 * 40
  const auto tags = tag_set(mesh);
  CHECK(tags.count(BoundaryTag::SlipWall) == 1);
  CHECK(tags.count(BoundaryTag::Top) == 1);
  CHECK(tags.count(BoundaryTag::PeriodicLeft) == 1);
  CHECK(tags.count(BoundaryTag::PeriodicRight) == 1);
  // SlipWall lives on the flat crest plane only
  for (const auto& e : mesh.boundary_edges)
    if (e.tag == BoundaryTag::SlipWall) {
      CHECK(mesh.vertices[e.a][1] == 0.0);
      CHECK(mesh.vertices[e.b][1] == 0.0);
    }
}

TEST_CASE("curved-top channel lands near the coarse published size") {
  MacroChannelSpec spec;
  spec.nx = 44;
  spec.ny = 21;
  spec.top_fn = [](double x1) { return 0.5 - 0.125 * std::sin(2 * kPi * x1); };
  const TriangleMesh mesh = mesh_macro_channel(spec);
  audit_mesh(mesh);
  CHECK(mesh.cell_count() == 1848);
  // top row follows the prescribed curve
  double top_max = 0;
  for (const auto& v : mesh.vertices)
    top_max = std::max(top_max, v[1]);
  CHECK(top_max == doctest::Approx(0.625).epsilon(1e-9));
}

TEST_CASE("macro step domain: audit and block structure") {
  MacroBfsSpec spec;
  const TriangleMesh mesh = mesh_macro_bfs(spec);
  audit_mesh(mesh);
  CHECK(mesh.cell_count() == 4920);
  const auto bb = mesh.bounding_box();
  CHECK(bb[0] == doctest::Approx(0.0));
  CHECK(bb[1] == doctest::Approx(23.0));
  CHECK(bb[3] == doctest::Approx(2.0));
  const auto tags = tag_set(mesh);
  CHECK(tags.count(BoundaryTag::Inflow) == 1);
  CHECK(tags.count(BoundaryTag::Outflow) == 1);
  CHECK(tags.count(BoundaryTag::SlipWall) == 1);
  // no vertex below the floor, none inside the solid step block
  for (const auto& v : mesh.vertices) {
    CHECK(v[1] >= -1e-12);
    if (v[0] < spec.inlet_length - 1e-9)
      CHECK(v[1] >= spec.step_y - 1e-12);
  }
}

TEST_CASE("rough DNS channel: audit, wall fidelity, periodic pairing") {
  const auto profile = make_profile(ProfileKind::Sinusoidal, 0.05);
  DnsChannelSpec spec;
  spec.wall_resolution = 8;
  spec.ny = 16;
  const TriangleMesh mesh = mesh_rough_dns(profile, spec);
  audit_mesh(mesh);
  CHECK(mesh.period == doctest::Approx(1.0));
  CHECK(!mesh.periodic_pairs.empty());
  // pairing is a bijection between the side columns with exact x2 match
  std::set<int> lefts, rights;
  for (const auto& pr : mesh.periodic_pairs) {
    CHECK(lefts.insert(pr[0]).second);
    CHECK(rights.insert(pr[1]).second);
    CHECK(mesh.vertices[pr[1]][0] - mesh.vertices[pr[0]][0] ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mesh.vertices[pr[0]][1] ==
          doctest::Approx(mesh.vertices[pr[1]][1]).epsilon(1e-12));
  }
  // bottom vertices sit on the wall graph
  for (const auto& e : mesh.boundary_edges)
    if (e.tag == BoundaryTag::NoSlipWall)
      for (int id : {e.a, e.b}) {
        const auto& v = mesh.vertices[id];
        if (v[1] < 0.1) // bottom wall, not the top one
          CHECK(v[1] == doctest::Approx(profile.wall(v[0])).epsilon(1e-12));
      }
}

TEST_CASE("refining the DNS wall resolution grows cells quadratically") {
  const auto profile = make_profile(ProfileKind::Sinusoidal, 0.1);
  DnsChannelSpec coarse, fine;
  coarse.wall_resolution = 6;
  coarse.ny = 10;
  fine.wall_resolution = 12;
  fine.ny = 20;
  const TriangleMesh a = mesh_rough_dns(profile, coarse);
  const TriangleMesh b = mesh_rough_dns(profile, fine);
  audit_mesh(a);
  audit_mesh(b);
  CHECK(b.cell_count() >= 4 * a.cell_count());
  CHECK(tag_set(a) == tag_set(b));
}

TEST_CASE("step DNS mesh: audit and roughness window") {
  const auto profile = make_profile(ProfileKind::BfsPatch, 0.1);
  DnsBfsSpec spec;
  const TriangleMesh mesh = mesh_bfs_dns(profile, spec);
  audit_mesh(mesh);
  CHECK(mesh.cell_count() == 43960);
  // the wall dips below the floor only inside the rough window
  double min_y = 0;
  for (const auto& v : mesh.vertices) {
    min_y = std::min(min_y, v[1]);
    if (v[1] < -1e-12) {
      CHECK(v[0] >= 6.0 - 1e-9);
      CHECK(v[0] <= 16.0 + 1e-9);
    }
  }
  CHECK(min_y < -0.05);
}

TEST_CASE("micro meshes: periodic and Dirichlet variants") {
  const auto profile = make_profile(ProfileKind::Sinusoidal, 0.1);
  MicroMeshSpec spec;
  spec.site = 0.3;
  spec.width = 0.1;
  spec.height = 0.4;
  spec.nx = 12;

  SUBCASE("periodic sides") {
    const TriangleMesh mesh = mesh_micro(profile, spec);
    audit_mesh(mesh);
    CHECK(!mesh.periodic_pairs.empty());
    CHECK(mesh.period == doctest::Approx(0.1));
    CHECK(tag_set(mesh).count(BoundaryTag::FreeStreamTop) == 1);
  }
  SUBCASE("Dirichlet sides") {
    spec.periodic_sides = false;
    const TriangleMesh mesh = mesh_micro(profile, spec);
    audit_mesh(mesh);
    CHECK(mesh.periodic_pairs.empty());
    const auto tags = tag_set(mesh);
    CHECK(tags.count(BoundaryTag::MicroLeft) == 1);
    CHECK(tags.count(BoundaryTag::MicroRight) == 1);
  }
  SUBCASE("seam mismatch is rejected for periodic sides") {
    spec.width = 0.73 * profile.wavelength();
    CHECK_THROWS_AS(mesh_micro(profile, spec), PeriodicMismatch);
  }
}

TEST_CASE("cell domain: audit, wall range, shared near-wall discretization") {
  const auto shape = unit_cell_sinusoidal();
  const TriangleMesh a = mesh_cell_domain(shape, 8.0, 16);
  audit_mesh(a);
  double wall_min = 10, wall_max = -10;
  for (const auto& e : a.boundary_edges)
    if (e.tag == BoundaryTag::NoSlipWall)
      for (int id : {e.a, e.b}) {
        wall_min = std::min(wall_min, a.vertices[id][1]);
        wall_max = std::max(wall_max, a.vertices[id][1]);
      }
  CHECK(wall_min == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(wall_max == doctest::Approx(1.0).epsilon(1e-12));

  // raising the truncation height keeps every near-wall vertex bit-identical
  // (only the clamped top row and the appended levels differ), which is what
  // makes truncation studies clean
  const TriangleMesh b = mesh_cell_domain(shape, 16.0, 16);
  audit_mesh(b);
  REQUIRE(b.vertices.size() > a.vertices.size());
  std::set<std::pair<double, double>> b_set;
  for (const auto& v : b.vertices)
    b_set.insert({v[0], v[1]});
  size_t checked = 0;
  for (const auto& v : a.vertices)
    if (v[1] <= 7.0) {
      CHECK(b_set.count({v[0], v[1]}) == 1);
      ++checked;
    }
  CHECK(checked > 100);
}

TEST_CASE("degenerate requests are rejected") {
  MacroChannelSpec bad;
  bad.nx = 0;
  CHECK_THROWS_AS(mesh_macro_channel(bad), MeshError);
  MacroChannelSpec flatland;
  flatland.height = 0.0;
  CHECK_THROWS_AS(mesh_macro_channel(flatland), MeshError);

  const auto profile = make_profile(ProfileKind::Sinusoidal, 0.1);
  DnsChannelSpec coarse;
  coarse.wall_resolution = 2;
  CHECK_THROWS_AS(mesh_rough_dns(profile, coarse), MeshError);

  MicroMeshSpec micro;
  micro.site = 0.0;
  micro.width = 0.1;
  micro.height = 0.4;
  micro.nx = 1;
  CHECK_THROWS_AS(mesh_micro(profile, micro), MeshError);

  CHECK_THROWS_AS(mesh_cell_domain(unit_cell_sinusoidal(), 1.0, 12),
                  TruncationTooLow);
}

TEST_CASE("audit catches broken meshes") {
  MacroChannelSpec spec;
  spec.nx = spec.ny = 4;
  TriangleMesh mesh = mesh_macro_channel(spec);

  SUBCASE("flipped triangle") {
    std::swap(mesh.triangles[0][0], mesh.triangles[0][1]);
    CHECK_THROWS_AS(audit_mesh(mesh), MeshError);
  }
  SUBCASE("missing boundary tag") {
    mesh.boundary_edges.pop_back();
    CHECK_THROWS_AS(audit_mesh(mesh), MeshError);
  }
  SUBCASE("broken periodic pair") {
    mesh.periodic_pairs[0][1] = mesh.periodic_pairs[1][1];
    CHECK_THROWS_AS(audit_mesh(mesh), PeriodicMismatch);
  }
}

TEST_CASE("mesh files round-trip byte-identically") {
  MacroChannelSpec spec;
  spec.nx = 6;
  spec.ny = 5;
  const TriangleMesh mesh = mesh_macro_channel(spec);
  const std::string p1 = "roundtrip_a.json";
  const std::string p2 = "roundtrip_b.json";
  save_mesh_json(mesh, p1);
  const TriangleMesh loaded = load_mesh_json(p1);
  audit_mesh(loaded);
  save_mesh_json(loaded, p2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(!s1.str().empty());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("mesh file errors carry the mesh error code") {
  CHECK_THROWS_AS(load_mesh_json("does_not_exist.json"), MeshError);
  const std::string p = "bad_tag.json";
  {
    std::ofstream out(p);
    out << R"({"vertices": [[0,0],[1,0],[0,1]], "triangles": [[0,1,2]],)"
        << R"( "boundary": [[0,1,"Bogus"],[1,2,"Top"],[2,0,"Top"]]})" << "\n";
  }
  CHECK_THROWS_AS(load_mesh_json(p), MeshError);
  std::remove(p.c_str());
}

TEST_CASE("boundary tag names round-trip") {
  for (auto tag : {BoundaryTag::NoSlipWall, BoundaryTag::SlipWall,
                   BoundaryTag::Top, BoundaryTag::Inflow, BoundaryTag::Outflow,
                   BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight,
                   BoundaryTag::FreeStreamTop, BoundaryTag::MicroLeft,
                   BoundaryTag::MicroRight})
    CHECK(boundary_tag_from_string(to_string(tag)) == tag);
  CHECK_THROWS_AS(boundary_tag_from_string("Bogus"), MeshError);
}
