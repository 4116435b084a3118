#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "specx/error.hpp"
#include "specx/mesh.hpp"

namespace specx {
namespace {

// Next line that is neither blank nor a comment.
bool next_content_line(std::istream& in, std::string& line, int& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

[[noreturn]] void fail(const std::filesystem::path& path, int line_no, const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

struct TorusSidecar {
    double tau_re = 0.0;
    double tau_im = 0.0;
    int res = 0;
};

TorusSidecar read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    TorusSidecar s;
    bool have_re = false, have_im = false, have_res = false;
    std::string line;
    int line_no = 0;
    while (next_content_line(in, line, line_no)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(path, line_no, "expected key=value");
        const std::string key = line.substr(0, eq);
        std::istringstream value(line.substr(eq + 1));
        if (key == "tau_re") have_re = static_cast<bool>(value >> s.tau_re);
        else if (key == "tau_im") have_im = static_cast<bool>(value >> s.tau_im);
        else if (key == "res") have_res = static_cast<bool>(value >> s.res);
        else fail(path, line_no, "unknown key '" + key + "'");
    }
    if (!have_re || !have_im || !have_res) fail(path, line_no, "missing tau_re, tau_im or res");
    return s;
}

}  // namespace

std::filesystem::path torus_sidecar_path(const std::filesystem::path& off_path) {
    auto p = off_path;
    p += ".torus";
    return p;
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file " + path.string());
    std::string line;
    int line_no = 0;
    if (!next_content_line(in, line, line_no)) fail(path, line_no, "empty file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") fail(path, line_no, "expected 'OFF' header");
    long nv = -1, nf = -1, ne = 0;
    if (!(header >> nv)) {
        if (!next_content_line(in, line, line_no)) fail(path, line_no, "missing counts line");
        header = std::istringstream(line);
        header >> nv;
    }
    if (!(header >> nf)) fail(path, line_no, "malformed counts line");
    header >> ne;
    if (nv <= 0 || nf <= 0) fail(path, line_no, "vertex and face counts must be positive");

    std::vector<Vec3> vertices;
    vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        if (!next_content_line(in, line, line_no)) fail(path, line_no, "unexpected end of vertices");
        std::istringstream ls(line);
        Vec3 p;
        if (!(ls >> p.x() >> p.y() >> p.z())) fail(path, line_no, "malformed vertex line");
        vertices.push_back(p);
    }
    std::vector<Triangle> triangles;
    triangles.reserve(nf);
    for (long i = 0; i < nf; ++i) {
        if (!next_content_line(in, line, line_no)) fail(path, line_no, "unexpected end of faces");
        std::istringstream ls(line);
        int arity = 0;
        if (!(ls >> arity) || arity < 3) fail(path, line_no, "malformed face line");
        std::vector<int> ids(arity);
        for (int& id : ids)
            if (!(ls >> id)) fail(path, line_no, "face has fewer indices than declared");
        for (int k = 1; k + 1 < arity; ++k) triangles.push_back({ids[0], ids[k], ids[k + 1]});
    }

    const auto sidecar = torus_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        const auto s = read_sidecar(sidecar);
        TriMesh torus = build_torus_mesh({s.tau_re, s.tau_im}, s.res);
        if (torus.num_vertices() != nv || torus.num_triangles() != static_cast<int>(triangles.size()))
            throw ParseError(path.string() + ": torus sidecar does not match the OFF counts");
        for (long i = 0; i < nv; ++i)
            if ((torus.vertices()[i] - vertices[i]).norm() > 1e-9)
                throw ParseError(path.string() + ": torus sidecar does not match vertex positions");
        return torus;
    }
    return TriMesh::create(std::move(vertices), std::move(triangles));
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
    if (mesh.is_periodic()) {
        const auto& chart = *mesh.chart();
        const int n = chart.resolution;
        if (n < 3 || mesh.num_vertices() != n * n || mesh.num_triangles() != 2 * n * n)
            throw DomainError("only complete torus meshes can be written as OFF + sidecar");
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << std::setprecision(17);
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.num_edges()
        << '\n';
    for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    if (!out) throw ParseError("failed writing " + path.string());

    const auto sidecar = torus_sidecar_path(path);
    if (mesh.is_periodic()) {
        std::ofstream side(sidecar);
        side << std::setprecision(17) << "tau_re=" << mesh.chart()->tau.real() << '\n'
             << "tau_im=" << mesh.chart()->tau.imag() << '\n'
             << "res=" << mesh.chart()->resolution << '\n';
        if (!side) throw ParseError("failed writing " + sidecar.string());
    } else if (std::filesystem::exists(sidecar)) {
        std::filesystem::remove(sidecar);
    }
}

}  // namespace specx
