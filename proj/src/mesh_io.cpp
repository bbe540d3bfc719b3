#include "inrshape/mesh_io.hpp"

#include "inrshape/errors.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace inrshape {

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string format_obj(const TriMesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 64 + mesh.faces.size() * 24);
    char buf[128];
    for (const auto& v : mesh.vertices) {
        const int n = std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out.append(buf, std::size_t(n));
    }
    for (const auto& f : mesh.faces) {
        const int n = std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
        out.append(buf, std::size_t(n));
    }
    return out;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    const std::string text = format_obj(mesh);
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

TriMesh parse_obj(const std::string& text) {
    TriMesh mesh;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) fail(ErrorCode::Io, "malformed vertex on OBJ line " + std::to_string(line_no));
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<std::uint32_t> poly;
            std::string token;
            while (ls >> token) {
                long idx = 0;
                const auto slash = token.find('/');
                const std::string head = token.substr(0, slash);
                const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc() || idx == 0) {
                    fail(ErrorCode::Io, "malformed face index on OBJ line " + std::to_string(line_no));
                }
                if (idx < 0) idx += long(mesh.vertices.size()) + 1;
                if (idx < 1) fail(ErrorCode::Io, "face index out of range on OBJ line " + std::to_string(line_no));
                poly.push_back(std::uint32_t(idx - 1));
            }
            if (poly.size() < 3) fail(ErrorCode::Io, "face with fewer than 3 vertices on OBJ line " + std::to_string(line_no));
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
        }
    }
    mesh.validate();
    return mesh;
}

TriMesh read_obj(const std::filesystem::path& path) { return parse_obj(read_text(path)); }

TriMesh read_stl_binary(const std::filesystem::path& path) {
    const std::string data = read_text(path);
    if (data.size() < 84) fail(ErrorCode::Io, "STL file too short: " + path.string());
    std::uint32_t count = 0;
    std::memcpy(&count, data.data() + 80, 4);
    if (data.size() < 84 + std::size_t(count) * 50) {
        fail(ErrorCode::Io, "STL file truncated: " + path.string());
    }
    TriMesh mesh;
    std::map<std::array<float, 3>, std::uint32_t> welded;
    const char* p = data.data() + 84;
    for (std::uint32_t t = 0; t < count; ++t, p += 50) {
        Face face{};
        for (int k = 0; k < 3; ++k) {
            std::array<float, 3> xyz{};
            std::memcpy(xyz.data(), p + 12 + 12 * k, 12);
            auto [it, inserted] = welded.emplace(xyz, std::uint32_t(mesh.vertices.size()));
            if (inserted) mesh.vertices.emplace_back(xyz[0], xyz[1], xyz[2]);
            face[k] = it->second;
        }
        mesh.faces.push_back(face);
    }
    mesh.validate();
    return mesh;
}

TriMesh read_mesh(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".obj") return read_obj(path);
    if (ext == ".stl") return read_stl_binary(path);
    fail(ErrorCode::Io, "unsupported mesh format: " + path.string());
}

}  // namespace inrshape
