#pragma once

/**
 * @file mesh.hpp
 * @brief Interface-fitted meshes of concentric core-shell domains.
 *
 * Two mesh families share one representation:
 *  - radial: a 1D partition of [0, r2] for the spherically symmetric
 *    reduction in R^N. Integrals carry the weight |S^{N-1}| r^{N-1}.
 *  - planar2d: a structured polar triangulation of the disc of radius r2,
 *    in which the circle r = r1 is approximated by an inscribed polygon
 *    made of mesh edges.
 *
 * Element vertices are stored in a fixed-size array; radial segments use
 * the first two entries.
 */

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace coreshell {

enum class MeshKind { radial, planar2d };

enum class Region : std::uint8_t { core = 1, shell = 2 };

std::string to_string(MeshKind kind);
std::string to_string(Region region);

struct GeometrySpec {
    MeshKind kind{MeshKind::radial};
    int dimension{3};  ///< space dimension N; planar2d requires N = 2
    double r1{0.5};    ///< core radius
    double r2{1.0};    ///< outer radius
    double h_target{0.125};

    /// Throws std::invalid_argument naming the violated invariant.
    void validate() const;
};

struct Point {
    double x{0.0};
    double y{0.0};
};

/// A facet on the interface. In 1D it is a single node (`node_count` == 1),
/// in 2D an edge. `normal` is the unit normal pointing into the shell.
struct GammaFacet {
    std::array<std::size_t, 2> nodes{};
    std::size_t node_count{0};
    Point normal;
    std::size_t core_element{0};
    std::size_t shell_element{0};
};

struct CoreShellMesh {
    GeometrySpec geometry;
    std::vector<Point> nodes;
    std::vector<std::array<std::size_t, 3>> elements;
    std::vector<Region> region;
    std::vector<GammaFacet> gamma_facets;
    std::vector<std::size_t> s_nodes;  ///< Dirichlet nodes, sorted

    /// Radial weight r^radial_power, scaled by solid_angle. Both are unused
    /// in planar meshes.
    double radial_power{0.0};
    double solid_angle{1.0};

    std::size_t node_count() const { return nodes.size(); }
    std::size_t element_count() const { return elements.size(); }
    std::size_t vertices_per_element() const { return geometry.kind == MeshKind::radial ? 2 : 3; }
    bool is_radial() const { return geometry.kind == MeshKind::radial; }

    /// Unweighted length (1D) or signed area (2D) of element e.
    double element_measure(std::size_t e) const;
    std::size_t count_region(Region r) const;
    /// true at s_nodes
    std::vector<std::uint8_t> dirichlet_mask() const;

    /// Checks every structural invariant; throws std::runtime_error with the
    /// offending element or facet index.
    void check() const;
};

/// Surface measure of the unit sphere S^{N-1} in R^N.
double unit_sphere_measure(int dimension);

CoreShellMesh build_radial_mesh(const GeometrySpec& spec);
CoreShellMesh build_annulus_mesh(const GeometrySpec& spec);
/// Dispatches on spec.kind.
CoreShellMesh build_mesh(const GeometrySpec& spec);

/// Uniform refinement: bisection in 1D, red refinement in 2D. New nodes on
/// the circles r = r1 and r = r2 are projected onto those circles.
CoreShellMesh refine(const CoreShellMesh& mesh);

namespace testing {
/// Unit-weight interval [0, length] with n elements and Dirichlet nodes at
/// both ends. All elements are tagged core and there is no interface.
CoreShellMesh interval_mesh(double length, std::size_t n_elements);
/// Replaces the radial weight by 1 (no r^{N-1}, no solid angle).
CoreShellMesh with_unit_weight(CoreShellMesh mesh);
}  // namespace testing

/// Legacy-VTK (ASCII, UNSTRUCTURED_GRID) export. Radial nodes are written
/// as (r, 0, 0). An optional point field is written as POINT_DATA.
void write_vtk(std::ostream& os, const CoreShellMesh& mesh, const std::string& title,
               const std::vector<double>* point_field = nullptr,
               const std::string& field_name = "u");

}  // namespace coreshell
