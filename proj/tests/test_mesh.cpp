#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "cip/mesh.hpp"
#include "cip/mesh_io.hpp"

using Catch::Approx;
using namespace cip;

TEST_CASE("square mesh counts", "[mesh]") {
    const Mesh m1 = generate_square(1);
    CHECK(m1.vertices.size() == 4);
    CHECK(m1.triangles.size() == 2);
    CHECK(m1.interior_edges.size() == 1);
    CHECK(m1.boundary_edges.size() == 4);
    CHECK(m1.h == Approx(std::sqrt(2.0)).margin(1e-15));

    const Mesh m2 = generate_square(2);
    CHECK(m2.vertices.size() == 9);
    CHECK(m2.triangles.size() == 8);
    CHECK(m2.h == Approx(std::sqrt(2.0) / 2).margin(1e-15));
}

TEST_CASE("square mesh invariants", "[mesh]") {
    const Mesh m = generate_square(5);
    // Euler relation for a simply connected planar triangulation
    CHECK(static_cast<int>(m.vertices.size()) - m.num_edges() +
              static_cast<int>(m.triangles.size()) ==
          1);
    CHECK(m.total_area() == Approx(1.0).margin(1e-12));
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        CHECK(m.triangle_area(static_cast<int>(t)) > 0.0);
    }
    for (const auto& e : m.interior_edges) {
        CHECK(norm(e.normal) == Approx(1.0).margin(1e-12));
        const Vec2 ev = m.vertices[e.verts_left[1]] - m.vertices[e.verts_left[0]];
        CHECK(std::abs(dot(e.normal, ev)) <= 1e-12 * norm(ev));
        CHECK(e.tri_left != e.tri_right);
    }
    for (const auto& e : m.boundary_edges) {
        CHECK(norm(e.normal) == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("periodic square identification", "[mesh]") {
    const Mesh m = generate_square(2, true);
    CHECK(m.num_classes == 4);
    CHECK(m.boundary_edges.empty());
    CHECK(m.interior_edges.size() == 12); // 3 * nele^2
    for (const auto& e : m.interior_edges) {
        CHECK(m.vertex_class[e.verts_left[0]] == m.vertex_class[e.verts_right[0]]);
        CHECK(m.vertex_class[e.verts_left[1]] == m.vertex_class[e.verts_right[1]]);
    }

    const Mesh m4 = generate_square(4, true);
    CHECK(m4.num_classes == 16);
    CHECK(m4.boundary_edges.empty());
    CHECK(m4.interior_edges.size() == 48);
}

TEST_CASE("disc mesh geometry", "[mesh]") {
    const Mesh d8 = generate_disc(8);
    CHECK(d8.boundary_edges.size() == 8);
    for (const auto& e : d8.boundary_edges) {
        for (int v : e.verts) {
            CHECK(norm(d8.vertices[v]) == Approx(1.0).margin(1e-12));
        }
    }

    const double pi = 3.14159265358979323846;
    const Mesh d80 = generate_disc(80);
    CHECK(d80.boundary_edges.size() == 80);
    CHECK(d80.h >= pi / 80);
    CHECK(d80.h <= 4 * pi / 80);

    for (int nele : {8, 20, 40, 80, 160}) {
        const Mesh d = generate_disc(nele);
        CHECK(d.shape_regularity < 10.0);
        CHECK(static_cast<int>(d.vertices.size()) - d.num_edges() +
                  static_cast<int>(d.triangles.size()) ==
              1);
    }

    // area deficit vs pi shrinks ~4x per doubling
    const double def40 = pi - generate_disc(40).total_area();
    const double def80 = pi - generate_disc(80).total_area();
    const double def160 = pi - generate_disc(160).total_area();
    CHECK(def40 > 0.0);
    CHECK(def40 / def80 > 2.5);
    CHECK(def80 / def160 > 2.5);
}

TEST_CASE("disc mesher rejects bad nele", "[mesh]") {
    CHECK_THROWS_AS(generate_disc(6), std::invalid_argument);
    CHECK_THROWS_AS(generate_disc(10), std::invalid_argument);
    CHECK_THROWS_AS(generate_square(0), std::invalid_argument);
}

TEST_CASE("boundary classification", "[mesh]") {
    const Mesh m = generate_square(4);
    auto bx = [](Vec2, double) { return Vec2{1.0, 0.0}; };
    const BoundaryPartition p = classify_boundary(m, bx, 0.0);
    CHECK(p.inflow_edges.size() == 4);
    for (int b : p.inflow_edges) {
        CHECK(m.boundary_edges[b].marker == 4); // left side
    }
    CHECK(p.inflow_edges.size() + p.outflow_edges.size() == m.boundary_edges.size());

    auto bxm = [](Vec2, double) { return Vec2{-1.0, 0.0}; };
    const BoundaryPartition pm = classify_boundary(m, bxm, 0.0);
    for (int b : pm.inflow_edges) {
        CHECK(m.boundary_edges[b].marker == 2); // right side
    }

    // rotation: beta . n vanishes identically on the polygonal circle
    const Mesh d = generate_disc(24);
    auto rot = [](Vec2 x, double) { return Vec2{x.y, -x.x}; };
    const BoundaryPartition pd = classify_boundary(d, rot, 0.0);
    CHECK(pd.inflow_edges.empty());
    CHECK(pd.outflow_edges.size() == d.boundary_edges.size());

    const Mesh per = generate_square(4, true);
    CHECK_THROWS_AS(classify_boundary(per, bx, 0.0), std::invalid_argument);
}

TEST_CASE("mesh export/import round-trip", "[mesh_io]") {
    const Mesh m = generate_square(2);
    std::stringstream ss;
    export_mesh_stream(m, ss);
    const Mesh r = import_mesh_stream(ss);
    REQUIRE(r.vertices.size() == m.vertices.size());
    REQUIRE(r.triangles.size() == m.triangles.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        CHECK(r.vertices[i].x == m.vertices[i].x);
        CHECK(r.vertices[i].y == m.vertices[i].y);
    }
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        CHECK(r.triangles[t] == m.triangles[t]);
    }
    CHECK(r.boundary_edges.size() == m.boundary_edges.size());

    // disc round-trip keeps exact coordinates
    const Mesh d = generate_disc(12);
    std::stringstream sd;
    export_mesh_stream(d, sd);
    const Mesh rd = import_mesh_stream(sd);
    for (std::size_t i = 0; i < d.vertices.size(); ++i) {
        CHECK(rd.vertices[i].x == d.vertices[i].x);
        CHECK(rd.vertices[i].y == d.vertices[i].y);
    }
}

TEST_CASE("mesh import error reporting", "[mesh_io]") {
    // declared 3 vertices but only 2 present: the first triangle line is
    // consumed as a vertex and the boundary line parsed as a triangle with a
    // repeated index fails at line 5
    std::stringstream bad("3 1 3\n0 0 1\n1 0 1\n0 1 2\n0 1 0\n1 2 0\n2 0 0\n");
    try {
        import_mesh_stream(bad);
        FAIL("expected parse error");
    } catch (const std::runtime_error& ex) {
        CHECK(std::string(ex.what()).find("line 5") != std::string::npos);
    }

    // out-of-range index
    std::stringstream oor("3 1 0\n0 0 1\n1 0 1\n0 1 1\n0 1 7\n");
    try {
        import_mesh_stream(oor);
        FAIL("expected parse error");
    } catch (const std::runtime_error& ex) {
        CHECK(std::string(ex.what()).find("line 5") != std::string::npos);
        CHECK(std::string(ex.what()).find("out of range") != std::string::npos);
    }

    // clockwise triangle is repaired with a warning
    std::stringstream cw("3 1 3\n0 0 1\n1 0 1\n0 1 1\n0 2 1\n0 1 1\n1 2 1\n2 0 1\n");
    std::vector<std::string> warnings;
    const Mesh m = import_mesh_stream(cw, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("clockwise") != std::string::npos);
    CHECK(m.triangle_area(0) > 0.0);

    // truncated file
    std::stringstream trunc("4 2 0\n0 0 1\n1 0 1\n0 1 1\n");
    CHECK_THROWS_AS(import_mesh_stream(trunc), std::runtime_error);
}

TEST_CASE("comments and blank lines in mesh files", "[mesh_io]") {
    std::stringstream in(
        "# a comment\n"
        "3 1 3\n"
        "\n"
        "0 0 1  # corner\n"
        "1 0 1\n"
        "0 1 1\n"
        "0 1 2\n"
        "0 1 1\n"
        "1 2 1\n"
        "2 0 1\n");
    const Mesh m = import_mesh_stream(in);
    CHECK(m.triangles.size() == 1);
    CHECK(m.boundary_edges.size() == 3);
    CHECK(m.boundary_edges[0].marker == 1);
}
