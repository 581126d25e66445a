#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cip/mesh.hpp"
#include "cip/quadrature.hpp"

namespace cip {

using SparseMat = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

// Continuous Lagrange space of degree 1 or 2 on a Mesh. Vertex dofs are the
// identification classes; P2 adds one dof per edge entity, so dofs shared by
// adjacent elements (and across periodic seams) coincide by construction.
struct FeSpace {
    const Mesh* mesh = nullptr;
    int degree = 1;
    int ndof = 0;
    std::vector<std::array<int, 6>> element_dofs;
    std::vector<Vec2> dof_coords;

    int dofs_per_element() const { return degree == 1 ? 3 : 6; }
};

struct FeFunction {
    const FeSpace* space = nullptr;
    Vector coeffs;
};

inline FeSpace build_space(const Mesh& mesh, int degree) {
    if (degree != 1 && degree != 2) {
        throw std::invalid_argument("build_space: unsupported degree " + std::to_string(degree));
    }
    FeSpace sp;
    sp.mesh = &mesh;
    sp.degree = degree;
    const int nc = mesh.num_classes;
    sp.ndof = degree == 1 ? nc : nc + mesh.num_edges();

    sp.dof_coords.resize(sp.ndof);
    for (int c = 0; c < nc; ++c) {
        sp.dof_coords[c] = mesh.vertices[mesh.class_rep[c]];
    }
    if (degree == 2) {
        const int n_int = static_cast<int>(mesh.interior_edges.size());
        for (int e = 0; e < n_int; ++e) {
            const auto& ie = mesh.interior_edges[e];
            sp.dof_coords[nc + e] =
                0.5 * (mesh.vertices[ie.verts_left[0]] + mesh.vertices[ie.verts_left[1]]);
        }
        for (std::size_t b = 0; b < mesh.boundary_edges.size(); ++b) {
            const auto& be = mesh.boundary_edges[b];
            sp.dof_coords[nc + n_int + static_cast<int>(b)] =
                0.5 * (mesh.vertices[be.verts[0]] + mesh.vertices[be.verts[1]]);
        }
    }

    sp.element_dofs.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        auto& ed = sp.element_dofs[t];
        for (int l = 0; l < 3; ++l) {
            ed[l] = mesh.vertex_class[mesh.triangles[t][l]];
        }
        if (degree == 2) {
            for (int l = 0; l < 3; ++l) {
                ed[3 + l] = nc + mesh.tri_edges[t][l];
            }
        }
    }
    return sp;
}

// Reference basis at barycentric coordinates. P2 edge dofs follow the local
// edges (v0,v1),(v1,v2),(v2,v0).
inline void reference_basis(int degree, const std::array<double, 3>& l, double* vals) {
    if (degree == 1) {
        vals[0] = l[0];
        vals[1] = l[1];
        vals[2] = l[2];
    } else {
        for (int i = 0; i < 3; ++i) {
            vals[i] = l[i] * (2.0 * l[i] - 1.0);
        }
        vals[3] = 4.0 * l[0] * l[1];
        vals[4] = 4.0 * l[1] * l[2];
        vals[5] = 4.0 * l[2] * l[0];
    }
}

inline void reference_basis_grad(int degree, const std::array<double, 3>& l, Vec2* grads) {
    static const Vec2 dl[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
    if (degree == 1) {
        for (int i = 0; i < 3; ++i) {
            grads[i] = dl[i];
        }
    } else {
        for (int i = 0; i < 3; ++i) {
            grads[i] = (4.0 * l[i] - 1.0) * dl[i];
        }
        grads[3] = 4.0 * (l[1] * dl[0] + l[0] * dl[1]);
        grads[4] = 4.0 * (l[2] * dl[1] + l[1] * dl[2]);
        grads[5] = 4.0 * (l[0] * dl[2] + l[2] * dl[0]);
    }
}

// Affine map data of one triangle.
struct ElementGeometry {
    Vec2 a;
    Vec2 ab, ac;    // edge vectors
    double det;     // 2 * area
    Vec2 inv_jt_row0, inv_jt_row1; // rows of J^{-T}

    Vec2 point(const std::array<double, 3>& l) const {
        return a + l[1] * ab + l[2] * ac;
    }
    std::array<double, 3> barycentric(Vec2 p) const {
        const Vec2 d = p - a;
        const double l1 = cross(d, ac) / det;
        const double l2 = cross(ab, d) / det;
        return {1.0 - l1 - l2, l1, l2};
    }
    Vec2 map_grad(Vec2 ref_grad) const {
        return {dot(inv_jt_row0, ref_grad), dot(inv_jt_row1, ref_grad)};
    }
};

inline ElementGeometry element_geometry(const Mesh& mesh, int t) {
    const auto c = mesh.triangle_coords(t);
    ElementGeometry g;
    g.a = c[0];
    g.ab = c[1] - c[0];
    g.ac = c[2] - c[0];
    g.det = cross(g.ab, g.ac);
    g.inv_jt_row0 = {g.ac.y / g.det, -g.ab.y / g.det};
    g.inv_jt_row1 = {-g.ac.x / g.det, g.ab.x / g.det};
    return g;
}

struct EvalResult {
    double value;
    Vec2 gradient;
};

inline EvalResult evaluate(const FeFunction& fn, int element, Vec2 point) {
    const FeSpace& sp = *fn.space;
    const ElementGeometry g = element_geometry(*sp.mesh, element);
    const auto l = g.barycentric(point);
    if (l[0] < -1e-12 || l[1] < -1e-12 || l[2] < -1e-12) {
        throw std::invalid_argument("evaluate: point outside element");
    }
    double vals[6];
    Vec2 grads[6];
    reference_basis(sp.degree, l, vals);
    reference_basis_grad(sp.degree, l, grads);
    EvalResult r{0.0, {0.0, 0.0}};
    const int nd = sp.dofs_per_element();
    for (int i = 0; i < nd; ++i) {
        const double c = fn.coeffs[sp.element_dofs[element][i]];
        r.value += c * vals[i];
        r.gradient = r.gradient + c * g.map_grad(grads[i]);
    }
    return r;
}

template <typename F>
inline FeFunction interpolate_nodal(const F& f, double t, const FeSpace& space) {
    FeFunction fn;
    fn.space = &space;
    fn.coeffs.resize(space.ndof);
    for (int i = 0; i < space.ndof; ++i) {
        fn.coeffs[i] = f(space.dof_coords[i], t);
    }
    return fn;
}

// Basis values/gradients tabulated at the points of one quadrature rule.
struct BasisTable {
    int degree;
    std::vector<std::array<double, 6>> vals;
    std::vector<std::array<Vec2, 6>> grads;

    BasisTable(int deg, const QuadratureRule& rule) : degree(deg) {
        vals.resize(rule.points.size());
        grads.resize(rule.points.size());
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            reference_basis(deg, rule.points[q], vals[q].data());
            reference_basis_grad(deg, rule.points[q], grads[q].data());
        }
    }
};

// Load vector (f(.,t), phi_i) with the given quadrature degree.
template <typename F>
inline Vector assemble_load(const FeSpace& space, const F& f, double t, int qdegree) {
    const Mesh& mesh = *space.mesh;
    const QuadratureRule rule = triangle_quadrature(qdegree);
    const BasisTable table(space.degree, rule);
    Vector b = Vector::Zero(space.ndof);
    const int nd = space.dofs_per_element();
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double fx = f(g.point(rule.points[q]), t);
            const double w = rule.weights[q] * g.det * fx;
            for (int i = 0; i < nd; ++i) {
                b[space.element_dofs[e][i]] += w * table.vals[q][i];
            }
        }
    }
    return b;
}

using MassSolver = Eigen::SimplicialLDLT<SparseMat>;

// L2-projection onto the space: solve M c = (f, phi). The data term uses
// quadrature degree 2k+4.
template <typename F>
inline FeFunction l2_project(const F& f, double t, const FeSpace& space, const MassSolver& mass,
                             const SparseMat& mass_matrix) {
    const Vector b = assemble_load(space, f, t, 2 * space.degree + 4);
    FeFunction fn;
    fn.space = &space;
    fn.coeffs = mass.solve(b);
    const double bn = b.norm();
    if (bn > 0.0) {
        const double res = (mass_matrix * fn.coeffs - b).norm() / bn;
        if (res > 1e-12) {
            throw std::runtime_error("l2_project: mass solve residual " + std::to_string(res));
        }
    }
    return fn;
}

} // namespace cip
