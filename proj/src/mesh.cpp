#include "coreshell/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace coreshell {

namespace {

using Edge = std::pair<std::size_t, std::size_t>;

Edge make_edge(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double radius(const Point& p) { return std::hypot(p.x, p.y); }

double signed_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// Partition count such that the spacing does not exceed h; the small slack
// keeps exact ratios like 0.5 / 0.25 from rounding up.
std::size_t segments_for(double length, double h) {
    const double ratio = length / h;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio - 1e-9)));
}

// Marks gamma facets (edges shared by a core and a shell triangle) and the
// Dirichlet nodes (vertices of edges with a single adjacent triangle).
void mark_planar_facets(CoreShellMesh& mesh) {
    std::map<Edge, std::vector<std::size_t>> edge_elements;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& v = mesh.elements[e];
        for (int k = 0; k < 3; ++k) {
            edge_elements[make_edge(v[k], v[(k + 1) % 3])].push_back(e);
        }
    }

    mesh.gamma_facets.clear();
    std::vector<std::uint8_t> on_boundary(mesh.nodes.size(), 0);
    for (const auto& [edge, adjacent] : edge_elements) {
        if (adjacent.size() == 1) {
            on_boundary[edge.first] = 1;
            on_boundary[edge.second] = 1;
            continue;
        }
        const Region r0 = mesh.region[adjacent[0]];
        const Region r1 = mesh.region[adjacent[1]];
        if (r0 == r1) {
            continue;
        }
        GammaFacet facet;
        facet.nodes = {edge.first, edge.second};
        facet.node_count = 2;
        facet.core_element = r0 == Region::core ? adjacent[0] : adjacent[1];
        facet.shell_element = r0 == Region::core ? adjacent[1] : adjacent[0];

        const Point& a = mesh.nodes[edge.first];
        const Point& b = mesh.nodes[edge.second];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        Point n{(b.y - a.y) / len, -(b.x - a.x) / len};
        const auto& core = mesh.elements[facet.core_element];
        std::size_t opposite = core[0];
        for (std::size_t v : core) {
            if (v != edge.first && v != edge.second) {
                opposite = v;
            }
        }
        const Point& o = mesh.nodes[opposite];
        if ((o.x - a.x) * n.x + (o.y - a.y) * n.y > 0.0) {
            n = {-n.x, -n.y};
        }
        facet.normal = n;
        mesh.gamma_facets.push_back(facet);
    }

    mesh.s_nodes.clear();
    for (std::size_t i = 0; i < on_boundary.size(); ++i) {
        if (on_boundary[i]) {
            mesh.s_nodes.push_back(i);
        }
    }
}

void mark_radial_facets(CoreShellMesh& mesh) {
    mesh.gamma_facets.clear();
    for (std::size_t e = 0; e + 1 < mesh.elements.size(); ++e) {
        if (mesh.region[e] == Region::core && mesh.region[e + 1] == Region::shell) {
            GammaFacet facet;
            facet.nodes = {mesh.elements[e][1], mesh.elements[e][1]};
            facet.node_count = 1;
            facet.normal = {1.0, 0.0};
            facet.core_element = e;
            facet.shell_element = e + 1;
            mesh.gamma_facets.push_back(facet);
        }
    }
    mesh.s_nodes = {mesh.nodes.size() - 1};
}

}  // namespace

std::string to_string(MeshKind kind) { return kind == MeshKind::radial ? "radial" : "planar2d"; }

std::string to_string(Region region) { return region == Region::core ? "core" : "shell"; }

void GeometrySpec::validate() const {
    if (dimension < 2) {
        throw std::invalid_argument("geometry: dimension must be >= 2 (got " + std::to_string(dimension) + ")");
    }
    if (kind == MeshKind::planar2d && dimension != 2) {
        throw std::invalid_argument("geometry: planar2d requires dimension == 2");
    }
    if (!(r1 > 0.0)) {
        throw std::invalid_argument("geometry: r1 must be positive");
    }
    if (!(r1 < r2)) {
        throw std::invalid_argument("geometry: r1 < r2 violated (r1=" + fmt::format("{}", r1) +
                                    ", r2=" + fmt::format("{}", r2) + ")");
    }
    if (!(h_target > 0.0)) {
        throw std::invalid_argument("geometry: h_target must be positive");
    }
}

double unit_sphere_measure(int dimension) {
    const double n = dimension;
    return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

double CoreShellMesh::element_measure(std::size_t e) const {
    const auto& v = elements[e];
    if (is_radial()) {
        return nodes[v[1]].x - nodes[v[0]].x;
    }
    return signed_area(nodes[v[0]], nodes[v[1]], nodes[v[2]]);
}

std::size_t CoreShellMesh::count_region(Region r) const {
    return static_cast<std::size_t>(std::count(region.begin(), region.end(), r));
}

std::vector<std::uint8_t> CoreShellMesh::dirichlet_mask() const {
    std::vector<std::uint8_t> mask(nodes.size(), 0);
    for (std::size_t i : s_nodes) {
        mask[i] = 1;
    }
    return mask;
}

void CoreShellMesh::check() const {
    auto fail = [](const std::string& what) { throw std::runtime_error("mesh: " + what); };

    if (region.size() != elements.size()) {
        fail("region tag count does not match element count");
    }
    for (std::size_t e = 0; e < elements.size(); ++e) {
        for (std::size_t k = 0; k < vertices_per_element(); ++k) {
            if (elements[e][k] >= nodes.size()) {
                fail(fmt::format("element {} references node {} out of range", e, elements[e][k]));
            }
        }
        if (!(element_measure(e) > 0.0)) {
            fail(fmt::format("element {} has non-positive measure {}", e, element_measure(e)));
        }
    }

    const double r1 = geometry.r1;
    const double r2 = geometry.r2;
    const double tol = 1e-9 * r2;

    // Interface fitting: core elements inside Γ, shell elements outside the
    // inscribed polygon.
    const double inner_bound =
        is_radial() || gamma_facets.empty()
            ? r1
            : r1 * std::cos(std::numbers::pi / static_cast<double>(gamma_facets.size()));
    for (std::size_t e = 0; e < elements.size(); ++e) {
        for (std::size_t k = 0; k < vertices_per_element(); ++k) {
            const double r = radius(nodes[elements[e][k]]);
            if (region[e] == Region::core && r > r1 + tol) {
                fail(fmt::format("core element {} has a vertex outside the interface", e));
            }
            if (region[e] == Region::shell && r < inner_bound - tol) {
                fail(fmt::format("shell element {} has a vertex inside the interface", e));
            }
        }
    }

    for (std::size_t f = 0; f < gamma_facets.size(); ++f) {
        const auto& facet = gamma_facets[f];
        if (region[facet.core_element] != Region::core || region[facet.shell_element] != Region::shell) {
            fail(fmt::format("gamma facet {} is not shared by one core and one shell element", f));
        }
        if (std::abs(std::hypot(facet.normal.x, facet.normal.y) - 1.0) > 1e-12) {
            fail(fmt::format("gamma facet {} normal is not unit length", f));
        }
    }

    if (!std::is_sorted(s_nodes.begin(), s_nodes.end())) {
        fail("s_nodes not sorted");
    }
    for (std::size_t i : s_nodes) {
        if (std::abs(radius(nodes[i]) - r2) > tol) {
            fail(fmt::format("Dirichlet node {} is not on the outer boundary", i));
        }
    }
}

CoreShellMesh build_radial_mesh(const GeometrySpec& spec) {
    spec.validate();
    if (spec.kind != MeshKind::radial) {
        throw std::invalid_argument("build_radial_mesh: spec.kind must be radial");
    }
    const std::size_t n_core = segments_for(spec.r1, spec.h_target);
    const std::size_t n_shell = segments_for(spec.r2 - spec.r1, spec.h_target);

    CoreShellMesh mesh;
    mesh.geometry = spec;
    mesh.radial_power = spec.dimension - 1;
    mesh.solid_angle = unit_sphere_measure(spec.dimension);

    mesh.nodes.reserve(n_core + n_shell + 1);
    for (std::size_t i = 0; i < n_core; ++i) {
        mesh.nodes.push_back({spec.r1 * static_cast<double>(i) / static_cast<double>(n_core), 0.0});
    }
    mesh.nodes.push_back({spec.r1, 0.0});
    const double width = spec.r2 - spec.r1;
    for (std::size_t j = 1; j < n_shell; ++j) {
        mesh.nodes.push_back({spec.r1 + width * static_cast<double>(j) / static_cast<double>(n_shell), 0.0});
    }
    mesh.nodes.push_back({spec.r2, 0.0});

    for (std::size_t e = 0; e + 1 < mesh.nodes.size(); ++e) {
        mesh.elements.push_back({e, e + 1, 0});
        mesh.region.push_back(e < n_core ? Region::core : Region::shell);
    }
    mark_radial_facets(mesh);
    mesh.check();
    return mesh;
}

CoreShellMesh build_annulus_mesh(const GeometrySpec& spec) {
    spec.validate();
    if (spec.kind != MeshKind::planar2d) {
        throw std::invalid_argument("build_annulus_mesh: spec.kind must be planar2d");
    }
    constexpr std::size_t sectors = 6;
    const std::size_t core_rings = segments_for(spec.r1, spec.h_target);
    const std::size_t shell_rings = segments_for(spec.r2 - spec.r1, spec.h_target);
    const std::size_t rings = core_rings + shell_rings;

    auto ring_radius = [&](std::size_t k) {
        if (k <= core_rings) {
            return spec.r1 * static_cast<double>(k) / static_cast<double>(core_rings);
        }
        if (k == rings) {
            return spec.r2;
        }
        return spec.r1 + (spec.r2 - spec.r1) * static_cast<double>(k - core_rings) /
                             static_cast<double>(shell_rings);
    };
    // ring k holds sectors * k nodes; ring 0 is the centre
    auto ring_base = [](std::size_t k) { return k == 0 ? std::size_t{0} : 1 + 3 * k * (k - 1); };
    auto node_id = [&](std::size_t k, std::size_t m) {
        if (k == 0) {
            return std::size_t{0};
        }
        return ring_base(k) + m % (sectors * k);
    };

    CoreShellMesh mesh;
    mesh.geometry = spec;
    mesh.nodes.push_back({0.0, 0.0});
    for (std::size_t k = 1; k <= rings; ++k) {
        const double rho = ring_radius(k);
        const std::size_t count = sectors * k;
        for (std::size_t m = 0; m < count; ++m) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(count);
            mesh.nodes.push_back({rho * std::cos(theta), rho * std::sin(theta)});
        }
    }

    auto add_triangle = [&](std::size_t a, std::size_t b, std::size_t c, Region r) {
        if (signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0.0) {
            std::swap(b, c);
        }
        mesh.elements.push_back({a, b, c});
        mesh.region.push_back(r);
    };

    for (std::size_t k = 1; k <= rings; ++k) {
        const Region r = k <= core_rings ? Region::core : Region::shell;
        for (std::size_t j = 0; j < sectors; ++j) {
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t inner = node_id(k - 1, j * (k - 1) + i);
                const std::size_t outer = node_id(k, j * k + i);
                const std::size_t outer_next = node_id(k, j * k + i + 1);
                add_triangle(inner, outer, outer_next, r);
                if (i + 1 < k) {
                    const std::size_t inner_next = node_id(k - 1, j * (k - 1) + i + 1);
                    add_triangle(inner, outer_next, inner_next, r);
                }
            }
        }
    }

    mark_planar_facets(mesh);
    mesh.check();
    return mesh;
}

CoreShellMesh build_mesh(const GeometrySpec& spec) {
    return spec.kind == MeshKind::radial ? build_radial_mesh(spec) : build_annulus_mesh(spec);
}

CoreShellMesh refine(const CoreShellMesh& mesh) {
    const bool interval = mesh.is_radial() && mesh.s_nodes.size() != 1;
    if (!interval) {
        mesh.check();
    }
    CoreShellMesh out;
    out.geometry = mesh.geometry;
    out.geometry.h_target = mesh.geometry.h_target / 2.0;
    out.radial_power = mesh.radial_power;
    out.solid_angle = mesh.solid_angle;

    if (mesh.is_radial()) {
        for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
            const Point& a = mesh.nodes[mesh.elements[e][0]];
            const Point& b = mesh.nodes[mesh.elements[e][1]];
            out.nodes.push_back(a);
            out.nodes.push_back({0.5 * (a.x + b.x), 0.0});
        }
        out.nodes.push_back(mesh.nodes[mesh.elements.back()[1]]);
        for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
            out.elements.push_back({2 * e, 2 * e + 1, 0});
            out.elements.push_back({2 * e + 1, 2 * e + 2, 0});
            out.region.push_back(mesh.region[e]);
            out.region.push_back(mesh.region[e]);
        }
        if (!interval) {
            mark_radial_facets(out);
            out.check();
        } else {
            // interval test mesh: Dirichlet at both ends, no interface
            out.s_nodes = {0, out.nodes.size() - 1};
        }
        return out;
    }

    std::map<Edge, std::vector<std::size_t>> edge_elements;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& v = mesh.elements[e];
        for (int k = 0; k < 3; ++k) {
            edge_elements[make_edge(v[k], v[(k + 1) % 3])].push_back(e);
        }
    }

    out.nodes = mesh.nodes;
    std::map<Edge, std::size_t> midpoint;
    auto midpoint_of = [&](std::size_t a, std::size_t b) {
        const Edge edge = make_edge(a, b);
        if (auto it = midpoint.find(edge); it != midpoint.end()) {
            return it->second;
        }
        const Point& p = mesh.nodes[a];
        const Point& q = mesh.nodes[b];
        Point m{0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
        const auto& adjacent = edge_elements.at(edge);
        double target = -1.0;
        if (adjacent.size() == 1) {
            target = mesh.geometry.r2;
        } else if (mesh.region[adjacent[0]] != mesh.region[adjacent[1]]) {
            target = mesh.geometry.r1;
        }
        if (target > 0.0) {
            const double r = radius(m);
            m = {m.x * target / r, m.y * target / r};
        }
        out.nodes.push_back(m);
        midpoint.emplace(edge, out.nodes.size() - 1);
        return out.nodes.size() - 1;
    };

    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto [a, b, c] = mesh.elements[e];
        const std::size_t ab = midpoint_of(a, b);
        const std::size_t bc = midpoint_of(b, c);
        const std::size_t ca = midpoint_of(c, a);
        for (const auto& child : {std::array{a, ab, ca}, std::array{ab, b, bc}, std::array{ca, bc, c},
                                  std::array{ab, bc, ca}}) {
            out.elements.push_back(child);
            out.region.push_back(mesh.region[e]);
        }
    }
    mark_planar_facets(out);
    out.check();
    return out;
}

namespace testing {

CoreShellMesh interval_mesh(double length, std::size_t n_elements) {
    CoreShellMesh mesh;
    mesh.geometry = {MeshKind::radial, 2, length, 2.0 * length, length / static_cast<double>(n_elements)};
    mesh.radial_power = 0.0;
    mesh.solid_angle = 1.0;
    for (std::size_t i = 0; i <= n_elements; ++i) {
        mesh.nodes.push_back({length * static_cast<double>(i) / static_cast<double>(n_elements), 0.0});
    }
    for (std::size_t e = 0; e < n_elements; ++e) {
        mesh.elements.push_back({e, e + 1, 0});
        mesh.region.push_back(Region::core);
    }
    mesh.s_nodes = {0, n_elements};
    return mesh;
}

CoreShellMesh with_unit_weight(CoreShellMesh mesh) {
    mesh.radial_power = 0.0;
    mesh.solid_angle = 1.0;
    return mesh;
}

}  // namespace testing

void write_vtk(std::ostream& os, const CoreShellMesh& mesh, const std::string& title,
               const std::vector<double>* point_field, const std::string& field_name) {
    std::string header = title.substr(0, 255);
    std::replace(header.begin(), header.end(), '\n', ' ');
    const std::size_t nv = mesh.vertices_per_element();
    const int cell_type = nv == 2 ? 3 : 5;  // VTK_LINE, VTK_TRIANGLE

    fmt::print(os, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID\n", header);
    fmt::print(os, "POINTS {} double\n", mesh.node_count());
    for (const auto& p : mesh.nodes) {
        fmt::print(os, "{:.17g} {:.17g} 0\n", p.x, p.y);
    }
    fmt::print(os, "CELLS {} {}\n", mesh.element_count(), mesh.element_count() * (nv + 1));
    for (const auto& v : mesh.elements) {
        if (nv == 2) {
            fmt::print(os, "2 {} {}\n", v[0], v[1]);
        } else {
            fmt::print(os, "3 {} {} {}\n", v[0], v[1], v[2]);
        }
    }
    fmt::print(os, "CELL_TYPES {}\n", mesh.element_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        fmt::print(os, "{}\n", cell_type);
    }
    fmt::print(os, "CELL_DATA {}\nSCALARS region int 1\nLOOKUP_TABLE default\n", mesh.element_count());
    for (Region r : mesh.region) {
        fmt::print(os, "{}\n", static_cast<int>(r));
    }
    if (point_field != nullptr) {
        if (point_field->size() != mesh.node_count()) {
            throw std::invalid_argument("write_vtk: point field length does not match node count");
        }
        fmt::print(os, "POINT_DATA {}\nSCALARS {} double 1\nLOOKUP_TABLE default\n", mesh.node_count(), field_name);
        for (double value : *point_field) {
            fmt::print(os, "{:.17g}\n", value);
        }
    }
}

}  // namespace coreshell
