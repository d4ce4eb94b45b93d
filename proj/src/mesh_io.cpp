// ASCII mesh import/export for the surface and cell companion models.
//
// Surface meshes use `v x y z` and `f i j k` records with 1-based indices
// (the usual minimal triangle-mesh subset).  Cell meshes use a documented
// unstructured-grid layout: `POINTS n`, n coordinate lines, `TETS m`, then m
// lines of four 0-based point indices.
#include "msdem/shape.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace msdem {

namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return dot(b - a, cross(c - a, d - a)) / 6.0;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

} // namespace

void validate_mesh(const SurfaceMesh& mesh) {
    const int nv = static_cast<int>(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
        for (int i : t)
            if (i < 0 || i >= nv)
                throw std::runtime_error("surface mesh triangle index out of range");
        if (triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) <= 0.0)
            throw std::runtime_error("surface mesh contains a degenerate triangle");
    }
}

void validate_mesh(const CellMesh& mesh) {
    const int np = static_cast<int>(mesh.points.size());
    for (const auto& t : mesh.tets) {
        for (int i : t)
            if (i < 0 || i >= np)
                throw std::runtime_error("cell mesh tetrahedron index out of range");
        // Consistent orientation convention: positive signed volume.
        if (tet_volume(mesh.points[t[0]], mesh.points[t[1]], mesh.points[t[2]],
                       mesh.points[t[3]]) <= 0.0)
            throw std::runtime_error("cell mesh contains a non-positive-volume tetrahedron");
    }
}

SurfaceMesh read_surface_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open surface mesh file: " + path);
    SurfaceMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z)) fail(path, lineno, "malformed vertex record");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            int i, j, k;
            if (!(ss >> i >> j >> k)) fail(path, lineno, "malformed face record");
            mesh.triangles.push_back({i - 1, j - 1, k - 1});  // file is 1-based
        } else {
            fail(path, lineno, "unknown record '" + tag + "'");
        }
    }
    validate_mesh(mesh);
    return mesh;
}

void write_surface_mesh(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

CellMesh read_cell_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cell mesh file: " + path);
    CellMesh mesh;
    std::string line, tag;
    int lineno = 0;

    auto next_content = [&](std::istringstream& ss) {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            ss = std::istringstream(line);
            return true;
        }
        return false;
    };

    std::istringstream ss;
    if (!next_content(ss)) fail(path, lineno, "missing POINTS header");
    int np = 0;
    if (!(ss >> tag >> np) || tag != "POINTS" || np < 0)
        fail(path, lineno, "expected 'POINTS <count>'");
    mesh.points.reserve(np);
    for (int i = 0; i < np; ++i) {
        if (!next_content(ss)) fail(path, lineno, "unexpected end of point list");
        Vec3 p;
        if (!(ss >> p.x >> p.y >> p.z)) fail(path, lineno, "malformed point record");
        mesh.points.push_back(p);
    }
    if (!next_content(ss)) fail(path, lineno, "missing TETS header");
    int nt = 0;
    if (!(ss >> tag >> nt) || tag != "TETS" || nt < 0)
        fail(path, lineno, "expected 'TETS <count>'");
    mesh.tets.reserve(nt);
    for (int i = 0; i < nt; ++i) {
        if (!next_content(ss)) fail(path, lineno, "unexpected end of tetrahedron list");
        std::array<int, 4> t{};
        if (!(ss >> t[0] >> t[1] >> t[2] >> t[3]))
            fail(path, lineno, "malformed tetrahedron record");
        mesh.tets.push_back(t);
    }
    validate_mesh(mesh);
    return mesh;
}

void write_cell_mesh(const CellMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.precision(17);
    out << "POINTS " << mesh.points.size() << "\n";
    for (const auto& p : mesh.points) out << p.x << " " << p.y << " " << p.z << "\n";
    out << "TETS " << mesh.tets.size() << "\n";
    for (const auto& t : mesh.tets)
        out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
}

} // namespace msdem
