#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "coreshell/mesh.hpp"

using namespace coreshell;

namespace {

GeometrySpec radial(double r1, double r2, double h, int n = 3) {
    return GeometrySpec{.kind = MeshKind::radial, .dimension = n, .r1 = r1, .r2 = r2, .h_target = h};
}

GeometrySpec planar(double r1, double r2, double h) {
    return GeometrySpec{.kind = MeshKind::planar2d, .dimension = 2, .r1 = r1, .r2 = r2, .h_target = h};
}

double radius(const Point& p) { return std::hypot(p.x, p.y); }

double total_measure(const CoreShellMesh& m, Region only, bool filter) {
    double sum = 0.0;
    for (std::size_t e = 0; e < m.element_count(); ++e) {
        if (!filter || m.region[e] == only) {
            sum += m.element_measure(e);
        }
    }
    return sum;
}

double inscribed_polygon_area(double r, std::size_t sides) {
    return 0.5 * static_cast<double>(sides) * r * r * std::sin(2.0 * std::numbers::pi / static_cast<double>(sides));
}

std::size_t nodes_on_circle(const CoreShellMesh& m, double r) {
    std::size_t n = 0;
    for (const Point& p : m.nodes) {
        n += std::abs(radius(p) - r) < 1e-12 ? 1 : 0;
    }
    return n;
}

std::string error_of(const GeometrySpec& spec) {
    try {
        build_mesh(spec);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("radial mesh with r1 = 0.5, r2 = 1, h = 0.25") {
    const CoreShellMesh m = build_radial_mesh(radial(0.5, 1.0, 0.25));
    REQUIRE(m.node_count() == 5);
    const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(m.nodes[i].x == expected[i]);
        CHECK(m.nodes[i].y == 0.0);
    }
    CHECK(m.count_region(Region::core) == 2);
    CHECK(m.count_region(Region::shell) == 2);
    REQUIRE(m.gamma_facets.size() == 1);
    CHECK(m.gamma_facets[0].node_count == 1);
    CHECK(m.nodes[m.gamma_facets[0].nodes[0]].x == 0.5);
    CHECK(m.gamma_facets[0].normal.x == 1.0);
    CHECK(m.region[m.gamma_facets[0].core_element] == Region::core);
    CHECK(m.region[m.gamma_facets[0].shell_element] == Region::shell);
    REQUIRE(m.s_nodes.size() == 1);
    CHECK(m.s_nodes[0] == 4);
    const auto mask = m.dirichlet_mask();
    CHECK(mask[0] == 0);
    CHECK(mask[4] == 1);
    CHECK(m.radial_power == 2.0);
    CHECK(m.solid_angle == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("radial mesh places a node exactly on the interface") {
    const CoreShellMesh m = build_radial_mesh(radial(0.3, 1.0, 0.5));
    bool found = false;
    for (const Point& p : m.nodes) {
        found = found || p.x == 0.3;
    }
    CHECK(found);
    CHECK(m.nodes[m.gamma_facets.at(0).nodes[0]].x == 0.3);
    m.check();
}

TEST_CASE("radial element lengths sum to r2") {
    for (const auto& spec : {radial(0.5, 1.0, 0.25), radial(0.3, 1.0, 0.5), radial(0.1, 2.7, 0.013, 2),
                             radial(0.77, 0.78, 0.001, 5)}) {
        const CoreShellMesh m = build_radial_mesh(spec);
        CHECK(total_measure(m, Region::core, false) == doctest::Approx(spec.r2).epsilon(1e-14));
        CHECK(total_measure(m, Region::core, true) == doctest::Approx(spec.r1).epsilon(1e-14));
        for (std::size_t e = 0; e < m.element_count(); ++e) {
            CHECK(m.element_measure(e) > 0.0);
            CHECK(m.element_measure(e) <= spec.h_target * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("invalid geometry is rejected with the violated invariant") {
    CHECK(error_of(radial(1.0, 1.0, 0.1)).find("r1 < r2") != std::string::npos);
    CHECK(error_of(radial(1.5, 1.0, 0.1)).find("r1 < r2") != std::string::npos);
    CHECK(error_of(radial(0.0, 1.0, 0.1)).find("r1") != std::string::npos);
    CHECK(error_of(radial(0.5, 1.0, 0.0)).find("h") != std::string::npos);
    CHECK(error_of(radial(0.5, 1.0, -1.0)).find("h") != std::string::npos);
    CHECK(error_of(radial(0.5, 1.0, 0.1, 1)).find("dimension") != std::string::npos);
    GeometrySpec p = planar(0.5, 1.0, 0.1);
    p.dimension = 3;
    CHECK(error_of(p).find("dimension") != std::string::npos);
    CHECK_THROWS_AS(build_annulus_mesh(radial(0.5, 1.0, 0.1)), std::invalid_argument);
    CHECK_THROWS_AS(build_radial_mesh(planar(0.5, 1.0, 0.1)), std::invalid_argument);
}

TEST_CASE("unit sphere measures") {
    CHECK(unit_sphere_measure(2) == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(unit_sphere_measure(3) == doctest::Approx(4.0 * std::numbers::pi));
    CHECK(unit_sphere_measure(4) == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi));
}

TEST_CASE("planar mesh: triangle areas partition the inscribed polygons") {
    const CoreShellMesh m = build_annulus_mesh(planar(0.5, 1.0, 0.25));
    m.check();
    const std::size_t core_sides = nodes_on_circle(m, 0.5);
    const std::size_t outer_sides = nodes_on_circle(m, 1.0);
    CHECK(core_sides == 12);
    CHECK(outer_sides == 24);
    const double core_area = inscribed_polygon_area(0.5, core_sides);
    const double disc_area = inscribed_polygon_area(1.0, outer_sides);
    CHECK(total_measure(m, Region::core, true) == doctest::Approx(core_area).epsilon(1e-13));
    CHECK(total_measure(m, Region::shell, true) == doctest::Approx(disc_area - core_area).epsilon(1e-13));
    CHECK(total_measure(m, Region::core, false) < std::numbers::pi);
}

TEST_CASE("planar mesh: orientation, facets and boundary") {
    const CoreShellMesh m = build_annulus_mesh(planar(0.5, 1.0, 0.2));
    for (std::size_t e = 0; e < m.element_count(); ++e) {
        CHECK(m.element_measure(e) > 0.0);
    }
    CHECK(m.gamma_facets.size() == nodes_on_circle(m, 0.5));
    for (const GammaFacet& f : m.gamma_facets) {
        REQUIRE(f.node_count == 2);
        const Point& a = m.nodes[f.nodes[0]];
        const Point& b = m.nodes[f.nodes[1]];
        CHECK(std::abs(radius(a) - 0.5) < 1e-12);
        CHECK(std::abs(radius(b) - 0.5) < 1e-12);
        CHECK(std::hypot(f.normal.x, f.normal.y) == doctest::Approx(1.0));
        const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        auto side = [&](std::size_t e) {
            double cx = 0.0;
            double cy = 0.0;
            for (std::size_t v : m.elements[e]) {
                cx += m.nodes[v].x / 3.0;
                cy += m.nodes[v].y / 3.0;
            }
            return (cx - mid.x) * f.normal.x + (cy - mid.y) * f.normal.y;
        };
        CHECK(m.region[f.core_element] == Region::core);
        CHECK(m.region[f.shell_element] == Region::shell);
        CHECK(side(f.core_element) < 0.0);
        CHECK(side(f.shell_element) > 0.0);
    }
    const auto mask = m.dirichlet_mask();
    std::size_t masked = 0;
    for (std::size_t i = 0; i < m.node_count(); ++i) {
        const bool on_s = std::abs(radius(m.nodes[i]) - 1.0) < 1e-12;
        CHECK(static_cast<bool>(mask[i]) == on_s);
        masked += mask[i];
    }
    CHECK(masked == m.s_nodes.size());
}

TEST_CASE("no element straddles the interface") {
    auto check_fitted = [](const CoreShellMesh& m) {
        const double r1 = m.geometry.r1;
        for (std::size_t e = 0; e < m.element_count(); ++e) {
            bool inside = false;
            bool outside = false;
            for (std::size_t k = 0; k < m.vertices_per_element(); ++k) {
                const double r = radius(m.nodes[m.elements[e][k]]);
                inside = inside || r < r1 - 1e-12;
                outside = outside || r > r1 + 1e-12;
            }
            CHECK_FALSE((inside && outside));
            if (inside) {
                CHECK(m.region[e] == Region::core);
            }
            if (outside) {
                CHECK(m.region[e] == Region::shell);
            }
        }
    };
    CoreShellMesh p = build_annulus_mesh(planar(0.4, 1.0, 0.2));
    CoreShellMesh r = build_radial_mesh(radial(0.4, 1.0, 0.2));
    for (int level = 0; level < 3; ++level) {
        check_fitted(p);
        check_fitted(r);
        p = refine(p);
        r = refine(r);
    }
}

TEST_CASE("refinement in 1D bisects and keeps the interface node") {
    const CoreShellMesh m = build_radial_mesh(radial(0.5, 1.0, 0.25));
    const CoreShellMesh f = refine(m);
    CHECK(f.element_count() == 8);
    CHECK(f.node_count() == 9);
    CHECK(f.nodes[f.gamma_facets.at(0).nodes[0]].x == 0.5);
    CHECK(f.count_region(Region::core) == 4);
    CHECK(f.s_nodes == std::vector<std::size_t>{8});
    CHECK(f.radial_power == m.radial_power);
    f.check();
}

TEST_CASE("red refinement quadruples triangles and doubles interface facets") {
    CoreShellMesh m = build_annulus_mesh(planar(0.5, 1.0, 0.25));
    for (int level = 0; level < 3; ++level) {
        const CoreShellMesh f = refine(m);
        CHECK(f.element_count() == 4 * m.element_count());
        CHECK(f.count_region(Region::core) == 4 * m.count_region(Region::core));
        CHECK(f.count_region(Region::shell) == 4 * m.count_region(Region::shell));
        CHECK(f.gamma_facets.size() == 2 * m.gamma_facets.size());
        CHECK(f.s_nodes.size() == 2 * m.s_nodes.size());
        for (std::size_t i : f.s_nodes) {
            CHECK(std::abs(radius(f.nodes[i]) - 1.0) < 1e-12);
        }
        f.check();
        m = f;
    }
}

TEST_CASE("check() reports broken meshes") {
    CoreShellMesh m = build_annulus_mesh(planar(0.5, 1.0, 0.25));
    std::swap(m.elements[3][1], m.elements[3][2]);
    CHECK_THROWS_WITH_AS(m.check(), doctest::Contains("3"), std::runtime_error);

    CoreShellMesh r = build_radial_mesh(radial(0.5, 1.0, 0.25));
    r.s_nodes.push_back(1);
    CHECK_THROWS_AS(r.check(), std::runtime_error);
}

TEST_CASE("VTK output lists every node and cell") {
    const CoreShellMesh m = build_annulus_mesh(planar(0.5, 1.0, 0.25));
    std::vector<double> field(m.node_count(), 0.25);
    std::ostringstream os;
    write_vtk(os, m, "test", &field, "u");
    const std::string text = os.str();
    CHECK(text.rfind("# vtk DataFile Version", 0) == 0);
    CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(text.find("POINTS " + std::to_string(m.node_count()) + " double") != std::string::npos);
    CHECK(text.find("CELLS " + std::to_string(m.element_count()) + " " + std::to_string(4 * m.element_count())) !=
          std::string::npos);
    CHECK(text.find("CELL_TYPES " + std::to_string(m.element_count())) != std::string::npos);
    CHECK(text.find("POINT_DATA " + std::to_string(m.node_count())) != std::string::npos);
    CHECK(text.find("SCALARS u double") != std::string::npos);

    const CoreShellMesh r = build_radial_mesh(radial(0.5, 1.0, 0.25));
    std::ostringstream rs;
    write_vtk(rs, r, "radial");
    CHECK(rs.str().find("CELLS 4 12") != std::string::npos);
    CHECK(rs.str().find("POINT_DATA") == std::string::npos);
}
