#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cip/geometry.hpp"

namespace cip {

// Interior edge between tri_left and tri_right. The normal is the unit vector
// pointing out of tri_left. verts_left is the edge as traversed CCW in
// tri_left; verts_right holds the matching endpoints as geometric indices of
// tri_right's copy (identical unless the edge crosses a periodic seam, in
// which case the copies differ by a domain period).
struct InteriorEdge {
    std::array<int, 2> verts_left;
    std::array<int, 2> verts_right;
    int tri_left = -1;
    int tri_right = -1;
    Vec2 normal;
    double length = 0.0;
};

struct BoundaryEdge {
    std::array<int, 2> verts; // CCW in the owning triangle
    int tri = -1;
    Vec2 normal; // outward
    double length = 0.0;
    int marker = 0;
};

struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles; // CCW geometric vertex indices
    // Geometric vertex -> identification class (identity when non-periodic).
    std::vector<int> vertex_class;
    std::vector<int> class_rep; // class -> representative geometric vertex
    int num_classes = 0;
    bool periodic = false;

    std::vector<InteriorEdge> interior_edges;
    std::vector<BoundaryEdge> boundary_edges;
    // Per triangle, unified edge id of local edges (v0,v1),(v1,v2),(v2,v0).
    // Ids [0, n_int) are interior edges, [n_int, n_int + n_bnd) boundary.
    std::vector<std::array<int, 3>> tri_edges;

    double h = 0.0;                 // max edge length
    double shape_regularity = 0.0;  // max circumradius/inradius ratio

    int num_edges() const {
        return static_cast<int>(interior_edges.size() + boundary_edges.size());
    }
    std::array<Vec2, 3> triangle_coords(int t) const {
        const auto& tri = triangles[t];
        return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
    }
    double triangle_area(int t) const {
        const auto c = triangle_coords(t);
        return signed_area(c[0], c[1], c[2]);
    }
    double total_area() const {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            a += triangle_area(static_cast<int>(t));
        }
        return a;
    }
};

namespace detail {

inline std::array<int, 2> directed_edge(const std::array<int, 3>& tri, int local) {
    return {tri[local], tri[(local + 1) % 3]};
}

// Pair up single-owner geometric edges of a periodic mesh whose midpoints
// differ by one domain period (1,0) or (0,1).
inline int find_periodic_partner(const std::vector<Vec2>& mids, std::size_t i,
                                 const std::vector<bool>& taken) {
    constexpr double tol = 1e-9;
    static const Vec2 shifts[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (std::size_t j = 0; j < mids.size(); ++j) {
        if (j == i || taken[j]) {
            continue;
        }
        for (const Vec2& s : shifts) {
            if (norm(mids[i] + s - mids[j]) < tol) {
                return static_cast<int>(j);
            }
        }
    }
    return -1;
}

} // namespace detail

// Build edge topology and derived quantities from vertices/triangles.
// Triangles must already be CCW. vertex_class may be empty (identity).
inline Mesh build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                       std::vector<int> vertex_class = {}, bool periodic = false) {
    Mesh m;
    m.vertices = std::move(vertices);
    m.triangles = std::move(triangles);
    m.periodic = periodic;

    const int nv = static_cast<int>(m.vertices.size());
    if (vertex_class.empty()) {
        m.vertex_class.resize(nv);
        for (int i = 0; i < nv; ++i) {
            m.vertex_class[i] = i;
        }
        m.num_classes = nv;
    } else {
        if (static_cast<int>(vertex_class.size()) != nv) {
            throw std::invalid_argument("build_mesh: vertex_class size mismatch");
        }
        m.vertex_class = std::move(vertex_class);
        m.num_classes = 0;
        for (int c : m.vertex_class) {
            m.num_classes = std::max(m.num_classes, c + 1);
        }
    }
    m.class_rep.assign(m.num_classes, -1);
    for (int i = 0; i < nv; ++i) {
        const int c = m.vertex_class[i];
        if (c < 0 || c >= m.num_classes) {
            throw std::invalid_argument("build_mesh: vertex class out of range");
        }
        if (m.class_rep[c] < 0) {
            m.class_rep[c] = i;
        }
    }

    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        for (int v : m.triangles[t]) {
            if (v < 0 || v >= nv) {
                throw std::invalid_argument("build_mesh: triangle vertex index out of range");
            }
        }
        if (m.triangle_area(static_cast<int>(t)) <= 0.0) {
            throw std::invalid_argument("build_mesh: triangle " + std::to_string(t) +
                                        " is not counter-clockwise or is degenerate");
        }
    }

    // Geometric edges keyed by sorted vertex pair.
    struct Owner {
        int tri;
        int local;
    };
    std::map<std::array<int, 2>, std::vector<Owner>> geo_edges;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        for (int l = 0; l < 3; ++l) {
            auto d = detail::directed_edge(m.triangles[t], l);
            std::array<int, 2> key = {std::min(d[0], d[1]), std::max(d[0], d[1])};
            geo_edges[key].push_back({static_cast<int>(t), l});
        }
    }

    m.tri_edges.assign(m.triangles.size(), {-1, -1, -1});

    struct SingleOwner {
        std::array<int, 2> key;
        Owner owner;
    };
    std::vector<SingleOwner> single;

    auto edge_vec = [&m](const std::array<int, 2>& d) { return m.vertices[d[1]] - m.vertices[d[0]]; };
    auto outward_normal = [&edge_vec](const std::array<int, 2>& d) {
        const Vec2 e = edge_vec(d);
        const double len = norm(e);
        return Vec2{e.y / len, -e.x / len};
    };

    for (const auto& [key, owners] : geo_edges) {
        if (owners.size() > 2) {
            throw std::invalid_argument("build_mesh: edge shared by more than 2 triangles");
        }
        if (owners.size() == 2) {
            InteriorEdge e;
            const Owner& a = owners[0].tri <= owners[1].tri ? owners[0] : owners[1];
            const Owner& b = owners[0].tri <= owners[1].tri ? owners[1] : owners[0];
            e.tri_left = a.tri;
            e.tri_right = b.tri;
            e.verts_left = detail::directed_edge(m.triangles[a.tri], a.local);
            e.verts_right = e.verts_left;
            e.normal = outward_normal(e.verts_left);
            e.length = norm(edge_vec(e.verts_left));
            const int id = static_cast<int>(m.interior_edges.size());
            m.interior_edges.push_back(e);
            m.tri_edges[a.tri][a.local] = id;
            m.tri_edges[b.tri][b.local] = id;
        } else {
            single.push_back({key, owners[0]});
        }
    }

    if (!periodic) {
        // All two-owner edges are already in place, so the interior count is final.
        for (const auto& s : single) {
            BoundaryEdge e;
            e.tri = s.owner.tri;
            e.verts = detail::directed_edge(m.triangles[s.owner.tri], s.owner.local);
            e.normal = outward_normal(e.verts);
            e.length = norm(edge_vec(e.verts));
            const int id = static_cast<int>(m.boundary_edges.size());
            m.boundary_edges.push_back(e);
            m.tri_edges[s.owner.tri][s.owner.local] = static_cast<int>(m.interior_edges.size()) + id;
        }
    } else {
        std::vector<Vec2> mids(single.size());
        for (std::size_t i = 0; i < single.size(); ++i) {
            const auto d = detail::directed_edge(m.triangles[single[i].owner.tri], single[i].owner.local);
            mids[i] = 0.5 * (m.vertices[d[0]] + m.vertices[d[1]]);
        }
        std::vector<bool> taken(single.size(), false);
        for (std::size_t i = 0; i < single.size(); ++i) {
            if (taken[i]) {
                continue;
            }
            const int j = detail::find_periodic_partner(mids, i, taken);
            if (j < 0) {
                throw std::invalid_argument("build_mesh: unmatched seam edge in periodic mesh");
            }
            taken[i] = taken[j] = true;
            InteriorEdge e;
            e.tri_left = single[i].owner.tri;
            e.tri_right = single[j].owner.tri;
            e.verts_left = detail::directed_edge(m.triangles[e.tri_left], single[i].owner.local);
            // Match right-copy endpoints to verts_left by translation.
            const auto dr = detail::directed_edge(m.triangles[e.tri_right], single[j].owner.local);
            const Vec2 shift = mids[j] - mids[i];
            if (norm(m.vertices[e.verts_left[0]] + shift - m.vertices[dr[1]]) < 1e-9) {
                e.verts_right = {dr[1], dr[0]};
            } else if (norm(m.vertices[e.verts_left[0]] + shift - m.vertices[dr[0]]) < 1e-9) {
                e.verts_right = {dr[0], dr[1]};
            } else {
                throw std::invalid_argument("build_mesh: seam edge endpoints do not align");
            }
            if (m.vertex_class[e.verts_left[0]] != m.vertex_class[e.verts_right[0]] ||
                m.vertex_class[e.verts_left[1]] != m.vertex_class[e.verts_right[1]]) {
                throw std::invalid_argument("build_mesh: seam edge classes do not match");
            }
            e.normal = outward_normal(e.verts_left);
            e.length = norm(edge_vec(e.verts_left));
            const int id = static_cast<int>(m.interior_edges.size());
            m.interior_edges.push_back(e);
            m.tri_edges[e.tri_left][single[i].owner.local] = id;
            m.tri_edges[e.tri_right][single[j].owner.local] = id;
        }
    }

    for (const auto& te : m.tri_edges) {
        for (int id : te) {
            if (id < 0) {
                throw std::invalid_argument("build_mesh: edge without id");
            }
        }
    }

    double h = 0.0;
    for (const auto& e : m.interior_edges) {
        h = std::max(h, e.length);
    }
    for (const auto& e : m.boundary_edges) {
        h = std::max(h, e.length);
    }
    m.h = h;

    double sr = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto c = m.triangle_coords(static_cast<int>(t));
        sr = std::max(sr, shape_ratio(c[0], c[1], c[2]));
    }
    m.shape_regularity = sr;

    return m;
}

// Structured triangulation of [0,1]^2 with nele cells per side, each cell cut
// by its positive-slope diagonal. Periodic meshes identify opposite sides.
inline Mesh generate_square(int nele, bool periodic = false) {
    if (nele < 1) {
        throw std::invalid_argument("generate_square: nele must be >= 1");
    }
    const int n = nele;
    std::vector<Vec2> verts;
    verts.reserve((n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            tris.push_back({a, b, c});
            tris.push_back({a, c, d});
        }
    }
    std::vector<int> cls;
    if (periodic) {
        cls.resize(verts.size());
        for (int j = 0; j <= n; ++j) {
            for (int i = 0; i <= n; ++i) {
                cls[vid(i, j)] = (j % n) * n + (i % n);
            }
        }
    }
    Mesh m = build_mesh(std::move(verts), std::move(tris), std::move(cls), periodic);
    for (auto& e : m.boundary_edges) {
        const Vec2 mid = 0.5 * (m.vertices[e.verts[0]] + m.vertices[e.verts[1]]);
        if (mid.y < 1e-12) {
            e.marker = 1;
        } else if (mid.x > 1.0 - 1e-12) {
            e.marker = 2;
        } else if (mid.y > 1.0 - 1e-12) {
            e.marker = 3;
        } else {
            e.marker = 4;
        }
    }
    return m;
}

namespace detail {

// splitmix64, mapped to [0,1)
inline double hash01(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Deterministic diagonal-flip pass: randomize the connectivity pattern the
// way an unstructured mesher would, subject to orientation, shape-quality
// and edge-length caps. Vertex positions are untouched.
inline void flip_edges(const std::vector<Vec2>& verts, std::vector<std::array<int, 3>>& tris,
                       double flip_prob, double max_shape_ratio, double max_edge_len) {
    std::map<std::array<int, 2>, std::array<int, 2>> owners;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        for (int l = 0; l < 3; ++l) {
            const int v0 = tris[t][l], v1 = tris[t][(l + 1) % 3];
            std::array<int, 2> key = {std::min(v0, v1), std::max(v0, v1)};
            auto [it, fresh] = owners.try_emplace(key, std::array<int, 2>{-1, -1});
            it->second[fresh ? 0 : 1] = static_cast<int>(t);
        }
    }
    std::vector<std::array<int, 2>> keys;
    keys.reserve(owners.size());
    for (const auto& [key, own] : owners) {
        if (own[1] >= 0) {
            keys.push_back(key);
        }
    }
    auto third_vertex = [&tris](int t, int a, int c) {
        for (int v : tris[t]) {
            if (v != a && v != c) {
                return v;
            }
        }
        return -1;
    };
    auto replace_owner = [&owners](int a, int b, int from, int to) {
        auto& own = owners[{std::min(a, b), std::max(a, b)}];
        if (own[0] == from) {
            own[0] = to;
        } else {
            own[1] = to;
        }
    };
    for (const auto& key : keys) {
        auto it = owners.find(key);
        if (it == owners.end() || it->second[1] < 0) {
            continue; // edge no longer exists or became boundary
        }
        const std::uint64_t hkey = (static_cast<std::uint64_t>(key[0]) << 24) ^
                                   static_cast<std::uint64_t>(key[1]);
        if (hash01(hkey ^ 0xf1ea5eedull) >= flip_prob) {
            continue;
        }
        const int t1 = it->second[0], t2 = it->second[1];
        const int a = key[0], c = key[1];
        const int b1 = third_vertex(t1, a, c), b2 = third_vertex(t2, a, c);
        if (b1 < 0 || b2 < 0 || b1 == b2) {
            continue;
        }
        if (norm(verts[b1] - verts[b2]) > max_edge_len) {
            continue;
        }
        // orient the new pair consistently with t1's traversal of (a,c)
        int aa = a, cc = c;
        const auto& tv = tris[t1];
        for (int l = 0; l < 3; ++l) {
            if (tv[l] == c && tv[(l + 1) % 3] == a) {
                std::swap(aa, cc);
                break;
            }
        }
        const std::array<int, 3> n1 = {aa, b2, b1};
        const std::array<int, 3> n2 = {cc, b1, b2};
        auto ok = [&verts, max_shape_ratio](const std::array<int, 3>& t) {
            const double area = signed_area(verts[t[0]], verts[t[1]], verts[t[2]]);
            return area > 1e-14 &&
                   shape_ratio(verts[t[0]], verts[t[1]], verts[t[2]]) <= max_shape_ratio;
        };
        if (!ok(n1) || !ok(n2)) {
            continue;
        }
        replace_owner(aa, b2, t2, t1);
        replace_owner(cc, b1, t1, t2);
        owners.erase(it);
        owners[{std::min(b1, b2), std::max(b1, b2)}] = {t1, t2};
        tris[t1] = n1;
        tris[t2] = n2;
    }
}

} // namespace detail

// Unit-disc triangulation from concentric rings: ring i of nrings sits at
// radius i/nrings and carries ceil(nele * i/nrings) vertices; consecutive
// rings are joined by marching both vertex circles, the innermost ring is a
// center fan. The angular positions inside each ring carry a deterministic
// offset and jitter so that no vertex line ever aligns with the rotation
// field (a perfectly polar lattice superconverges and masks the behaviour of
// the unstabilized method). All boundary vertices lie exactly on the unit
// circle and the construction depends on nele alone.
inline Mesh generate_disc(int nele) {
    if (nele < 8 || nele % 4 != 0) {
        throw std::invalid_argument("generate_disc: nele must be >= 8 and divisible by 4");
    }
    const int nrings = (nele + 5) / 6;
    const double pi = 3.14159265358979323846;
    const double golden = 0.6180339887498949;
    const double jitter_t = 0.12;
    const double jitter_r = 0.10;

    std::vector<Vec2> verts;
    verts.push_back({0.0, 0.0});
    std::vector<int> ring_start(nrings + 1, 0);
    std::vector<int> ring_count(nrings + 1, 0);
    std::vector<std::vector<double>> ring_angle(nrings + 1);
    for (int i = 1; i <= nrings; ++i) {
        const int ni = (nele * i + nrings - 1) / nrings; // ceil(nele*i/nrings)
        const double gap = 2.0 * pi / ni;
        const double offset = i * golden - std::floor(i * golden);
        ring_start[i] = static_cast<int>(verts.size());
        ring_count[i] = ni;
        ring_angle[i].resize(ni);
        for (int j = 0; j < ni; ++j) {
            const std::uint64_t key = (static_cast<std::uint64_t>(nele) << 40) ^
                                      (static_cast<std::uint64_t>(i) << 20) ^
                                      static_cast<std::uint64_t>(j);
            const double jt = jitter_t * (2.0 * detail::hash01(key) - 1.0);
            const double jr =
                i == nrings ? 0.0 : jitter_r * (2.0 * detail::hash01(key ^ 0x5bd1e995ull) - 1.0);
            const double a = gap * (j + offset + jt);
            const double r = (i + jr) / nrings;
            ring_angle[i][j] = a;
            verts.push_back({r * std::cos(a), r * std::sin(a)});
        }
    }

    std::vector<std::array<int, 3>> tris;
    // center fan
    {
        const int s = ring_start[1], c = ring_count[1];
        for (int j = 0; j < c; ++j) {
            tris.push_back({0, s + j, s + (j + 1) % c});
        }
    }
    // march consecutive rings
    for (int i = 1; i < nrings; ++i) {
        const int sa = ring_start[i], na = ring_count[i];
        const int sb = ring_start[i + 1], nb = ring_count[i + 1];
        int ia = 0, ib = 0;
        auto angle_a = [&](int k) { return ring_angle[i][k % na] + (k >= na ? 2.0 * pi : 0.0); };
        auto angle_b = [&](int k) { return ring_angle[i + 1][k % nb] + (k >= nb ? 2.0 * pi : 0.0); };
        while (ia < na || ib < nb) {
            const bool advance_inner =
                (ib == nb) || (ia < na && angle_a(ia + 1) <= angle_b(ib + 1));
            if (advance_inner) {
                tris.push_back({sa + ia % na, sb + ib % nb, sa + (ia + 1) % na});
                ++ia;
            } else {
                tris.push_back({sa + ia % na, sb + ib % nb, sb + (ib + 1) % nb});
                ++ib;
            }
        }
    }

    detail::flip_edges(verts, tris, 0.4, 8.0, 0.97 * 4.0 * pi / nele);

    Mesh m = build_mesh(std::move(verts), std::move(tris));
    for (auto& e : m.boundary_edges) {
        e.marker = 1;
    }
    return m;
}

struct BoundaryPartition {
    std::vector<int> inflow_edges;  // indices into mesh.boundary_edges
    std::vector<int> outflow_edges;
};

// Inflow iff beta(midpoint, t) . n < -1e-12; tangential edges go to outflow.
template <typename Velocity>
inline BoundaryPartition classify_boundary(const Mesh& mesh, const Velocity& beta, double t) {
    if (mesh.periodic) {
        throw std::invalid_argument("classify_boundary: periodic mesh has no boundary");
    }
    constexpr double tol = 1e-12;
    BoundaryPartition part;
    for (std::size_t b = 0; b < mesh.boundary_edges.size(); ++b) {
        const auto& e = mesh.boundary_edges[b];
        const Vec2 mid = 0.5 * (mesh.vertices[e.verts[0]] + mesh.vertices[e.verts[1]]);
        const Vec2 v = beta(mid, t);
        if (dot(v, e.normal) < -tol) {
            part.inflow_edges.push_back(static_cast<int>(b));
        } else {
            part.outflow_edges.push_back(static_cast<int>(b));
        }
    }
    return part;
}

} // namespace cip
