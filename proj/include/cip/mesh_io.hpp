#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cip/mesh.hpp"

namespace cip {

// ASCII mesh format, 0-based indices:
//   line 1: nv nt nb
//   nv lines: x y marker
//   nt lines: i j k
//   nb lines: i j marker
// '#' starts a comment, blank lines are allowed.

namespace detail {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next non-empty line's tokens; returns false on EOF.
    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            const auto hash = line.find('#');
            if (hash != std::string::npos) {
                line = line.substr(0, hash);
            }
            std::istringstream ss(line);
            tokens.clear();
            std::string tok;
            while (ss >> tok) {
                tokens.push_back(tok);
            }
            if (!tokens.empty()) {
                return true;
            }
        }
        ++line_no_;
        return false;
    }

    int line_no() const { return line_no_; }

private:
    std::istream& in_;
    int line_no_ = 0;
};

inline double parse_number(const std::string& tok, int line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size()) {
        throw std::runtime_error("mesh parse error at line " + std::to_string(line) +
                                 ": bad number '" + tok + "'");
    }
    return v;
}

inline long parse_int(const std::string& tok, int line) {
    const double v = parse_number(tok, line);
    const long i = static_cast<long>(v);
    if (static_cast<double>(i) != v) {
        throw std::runtime_error("mesh parse error at line " + std::to_string(line) +
                                 ": expected integer, got '" + tok + "'");
    }
    return i;
}

} // namespace detail

inline Mesh import_mesh_stream(std::istream& in, std::vector<std::string>* warnings = nullptr) {
    detail::LineReader reader(in);
    std::vector<std::string> tok;

    auto expect_line = [&](std::size_t ntok, const char* what) {
        if (!reader.next(tok)) {
            throw std::runtime_error("mesh parse error at line " + std::to_string(reader.line_no()) +
                                     ": unexpected end of file, expected " + std::string(what));
        }
        if (tok.size() != ntok) {
            throw std::runtime_error("mesh parse error at line " + std::to_string(reader.line_no()) +
                                     ": expected " + std::to_string(ntok) + " fields for " + what);
        }
    };

    expect_line(3, "header 'nv nt nb'");
    const long nv = detail::parse_int(tok[0], reader.line_no());
    const long nt = detail::parse_int(tok[1], reader.line_no());
    const long nb = detail::parse_int(tok[2], reader.line_no());
    if (nv < 3 || nt < 1 || nb < 0) {
        throw std::runtime_error("mesh parse error at line " + std::to_string(reader.line_no()) +
                                 ": malformed counts");
    }

    std::vector<Vec2> verts(nv);
    for (long i = 0; i < nv; ++i) {
        expect_line(3, "vertex 'x y marker'");
        verts[i].x = detail::parse_number(tok[0], reader.line_no());
        verts[i].y = detail::parse_number(tok[1], reader.line_no());
        detail::parse_int(tok[2], reader.line_no());
    }

    std::vector<std::array<int, 3>> tris(nt);
    for (long t = 0; t < nt; ++t) {
        expect_line(3, "triangle 'i j k'");
        const int line = reader.line_no();
        for (int l = 0; l < 3; ++l) {
            const long v = detail::parse_int(tok[l], line);
            if (v < 0 || v >= nv) {
                throw std::runtime_error("mesh parse error at line " + std::to_string(line) +
                                         ": vertex index " + std::to_string(v) + " out of range");
            }
            tris[t][l] = static_cast<int>(v);
        }
        if (tris[t][0] == tris[t][1] || tris[t][1] == tris[t][2] || tris[t][0] == tris[t][2]) {
            throw std::runtime_error("mesh parse error at line " + std::to_string(line) +
                                     ": triangle with repeated vertex");
        }
        const double area = signed_area(verts[tris[t][0]], verts[tris[t][1]], verts[tris[t][2]]);
        if (area == 0.0) {
            throw std::runtime_error("mesh parse error at line " + std::to_string(line) +
                                     ": degenerate triangle");
        }
        if (area < 0.0) {
            std::swap(tris[t][1], tris[t][2]);
            if (warnings) {
                warnings->push_back("line " + std::to_string(line) +
                                    ": clockwise triangle repaired by swapping two indices");
            }
        }
    }

    struct BndLine {
        std::array<int, 2> key;
        int marker;
        int line;
    };
    std::vector<BndLine> bnd(nb);
    for (long b = 0; b < nb; ++b) {
        expect_line(3, "boundary edge 'i j marker'");
        const int line = reader.line_no();
        std::array<int, 2> e;
        for (int l = 0; l < 2; ++l) {
            const long v = detail::parse_int(tok[l], line);
            if (v < 0 || v >= nv) {
                throw std::runtime_error("mesh parse error at line " + std::to_string(line) +
                                         ": vertex index " + std::to_string(v) + " out of range");
            }
            e[l] = static_cast<int>(v);
        }
        bnd[b] = {{std::min(e[0], e[1]), std::max(e[0], e[1])},
                  static_cast<int>(detail::parse_int(tok[2], line)),
                  line};
    }

    Mesh mesh = build_mesh(std::move(verts), std::move(tris));

    std::map<std::array<int, 2>, int> bnd_index;
    for (std::size_t b = 0; b < mesh.boundary_edges.size(); ++b) {
        const auto& e = mesh.boundary_edges[b];
        bnd_index[{std::min(e.verts[0], e.verts[1]), std::max(e.verts[0], e.verts[1])}] =
            static_cast<int>(b);
    }
    for (const auto& bl : bnd) {
        auto it = bnd_index.find(bl.key);
        if (it == bnd_index.end()) {
            throw std::runtime_error("mesh parse error at line " + std::to_string(bl.line) +
                                     ": listed edge is not a boundary edge of the triangulation");
        }
        mesh.boundary_edges[it->second].marker = bl.marker;
    }
    return mesh;
}

inline Mesh import_mesh(const std::string& path, std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("import_mesh: cannot open '" + path + "'");
    }
    return import_mesh_stream(in, warnings);
}

inline void export_mesh_stream(const Mesh& mesh, std::ostream& out) {
    std::vector<int> vmarker(mesh.vertices.size(), 0);
    for (const auto& e : mesh.boundary_edges) {
        vmarker[e.verts[0]] = 1;
        vmarker[e.verts[1]] = 1;
    }
    out << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' ' << mesh.boundary_edges.size()
        << '\n';
    char buf[64];
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g", mesh.vertices[i].x, mesh.vertices[i].y);
        out << buf << ' ' << vmarker[i] << '\n';
    }
    for (const auto& t : mesh.triangles) {
        out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    for (const auto& e : mesh.boundary_edges) {
        out << e.verts[0] << ' ' << e.verts[1] << ' ' << e.marker << '\n';
    }
}

inline void export_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("export_mesh: cannot open '" + path + "'");
    }
    export_mesh_stream(mesh, out);
}

} // namespace cip
