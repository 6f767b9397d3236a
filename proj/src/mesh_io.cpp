#include "mvd/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mvd {

namespace {

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    return out;
}

std::uint8_t to_byte(double c)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

enum class PlyType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

PlyType parse_type(const std::string& name)
{
    if (name == "char" || name == "int8") return PlyType::int8;
    if (name == "uchar" || name == "uint8") return PlyType::uint8;
    if (name == "short" || name == "int16") return PlyType::int16;
    if (name == "ushort" || name == "uint16") return PlyType::uint16;
    if (name == "int" || name == "int32") return PlyType::int32;
    if (name == "uint" || name == "uint32") return PlyType::uint32;
    if (name == "float" || name == "float32") return PlyType::float32;
    if (name == "double" || name == "float64") return PlyType::float64;
    throw Error("unsupported PLY type " + name);
}

template <typename T>
T read_le(std::istream& in)
{
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in)
        throw Error("truncated binary PLY");
    return v;
}

double read_value(std::istream& in, PlyType type, bool binary)
{
    if (!binary) {
        double v;
        if (!(in >> v))
            throw Error("malformed ASCII PLY body");
        return v;
    }
    switch (type) {
    case PlyType::int8: return read_le<std::int8_t>(in);
    case PlyType::uint8: return read_le<std::uint8_t>(in);
    case PlyType::int16: return read_le<std::int16_t>(in);
    case PlyType::uint16: return read_le<std::uint16_t>(in);
    case PlyType::int32: return read_le<std::int32_t>(in);
    case PlyType::uint32: return read_le<std::uint32_t>(in);
    case PlyType::float32: return read_le<float>(in);
    case PlyType::float64: return read_le<double>(in);
    }
    return 0.0;
}

template <typename T>
void write_le(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::float32;
    bool is_list = false;
    PlyType count_type = PlyType::uint8;
};

struct PlyElement {
    std::string name;
    long count = 0;
    std::vector<PlyProperty> props;
};

} // namespace

Mesh read_obj(const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            ls >> p.x() >> p.y() >> p.z();
            if (!ls)
                throw Error("malformed vertex line in " + path.string());
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                int i = std::stoi(tok.substr(0, tok.find('/')));
                idx.push_back(i < 0 ? static_cast<int>(verts.size()) + i : i - 1);
            }
            for (size_t k = 2; k < idx.size(); ++k)
                faces.push_back({idx[0], idx[k - 1], idx[k]});
        }
    }
    Mesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i)
        mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
    mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i)
        for (int k = 0; k < 3; ++k)
            mesh.faces(static_cast<Eigen::Index>(i), k) = faces[i][k];
    mesh.validate();
    return mesh;
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh)
{
    auto out = open_out(path);
    out << std::setprecision(17);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        out << "v " << mesh.vertices(v, 0) << ' ' << mesh.vertices(v, 1) << ' ' << mesh.vertices(v, 2) << '\n';
    for (int f = 0; f < mesh.face_count(); ++f)
        out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' ' << mesh.faces(f, 2) + 1 << '\n';
}

Mesh read_ply(const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0)
        throw Error(path.string() + " is not a PLY file");
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian")
                binary = true;
            else if (fmt != "ascii")
                throw Error("unsupported PLY format " + fmt);
        } else if (tag == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty())
                throw Error("PLY property before element");
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, it;
                ls >> ct >> it;
                p.is_list = true;
                p.count_type = parse_type(ct);
                p.type = parse_type(it);
            } else {
                p.type = parse_type(t);
            }
            ls >> p.name;
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }

    Mesh mesh;
    std::vector<std::array<int, 3>> faces;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            mesh.vertices.resize(e.count, 3);
            bool colored = false;
            for (const auto& p : e.props)
                colored |= p.name == "red";
            if (colored)
                mesh.colors = ColorMatrix::Ones(e.count, 4);
            for (long v = 0; v < e.count; ++v) {
                for (const auto& p : e.props) {
                    if (p.is_list) {
                        const long n = std::lround(read_value(in, p.count_type, binary));
                        for (long k = 0; k < n; ++k)
                            read_value(in, p.type, binary);
                        continue;
                    }
                    const double value = read_value(in, p.type, binary);
                    if (p.name == "x") mesh.vertices(v, 0) = value;
                    else if (p.name == "y") mesh.vertices(v, 1) = value;
                    else if (p.name == "z") mesh.vertices(v, 2) = value;
                    else if (p.name == "red") mesh.colors(v, 0) = value / 255.0;
                    else if (p.name == "green") mesh.colors(v, 1) = value / 255.0;
                    else if (p.name == "blue") mesh.colors(v, 2) = value / 255.0;
                    else if (p.name == "alpha") mesh.colors(v, 3) = value / 255.0;
                }
            }
        } else if (e.name == "face") {
            for (long f = 0; f < e.count; ++f)
                for (const auto& p : e.props) {
                    if (!p.is_list) {
                        read_value(in, p.type, binary);
                        continue;
                    }
                    const long n = std::lround(read_value(in, p.count_type, binary));
                    std::vector<int> idx(static_cast<size_t>(n));
                    for (auto& i : idx)
                        i = static_cast<int>(std::lround(read_value(in, p.type, binary)));
                    if (p.name == "vertex_indices" || p.name == "vertex_index")
                        for (size_t k = 2; k < idx.size(); ++k)
                            faces.push_back({idx[0], idx[k - 1], idx[k]});
                }
        } else {
            for (long r = 0; r < e.count; ++r)
                for (const auto& p : e.props) {
                    const long n = p.is_list ? std::lround(read_value(in, p.count_type, binary)) : 1;
                    for (long k = 0; k < n; ++k)
                        read_value(in, p.type, binary);
                }
        }
    }
    mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i)
        for (int k = 0; k < 3; ++k)
            mesh.faces(static_cast<Eigen::Index>(i), k) = faces[i][k];
    mesh.validate();
    return mesh;
}

void write_ply(const std::filesystem::path& path, const Mesh& mesh, PlyEncoding encoding)
{
    auto out = open_out(path);
    const bool binary = encoding == PlyEncoding::binary_little_endian;
    const bool colored = mesh.has_colors();
    out << "ply\n"
        << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
        << "element vertex " << mesh.vertex_count() << '\n'
        << "property double x\nproperty double y\nproperty double z\n";
    if (colored)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n";
    out << "element face " << mesh.face_count() << '\n'
        << "property list uchar int vertex_indices\n"
        << "end_header\n";
    if (binary) {
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            for (int d = 0; d < 3; ++d)
                write_le<double>(out, mesh.vertices(v, d));
            if (colored)
                for (int c = 0; c < 4; ++c)
                    write_le<std::uint8_t>(out, to_byte(mesh.colors(v, c)));
        }
        for (int f = 0; f < mesh.face_count(); ++f) {
            write_le<std::uint8_t>(out, 3);
            for (int k = 0; k < 3; ++k)
                write_le<std::int32_t>(out, mesh.faces(f, k));
        }
    } else {
        out << std::setprecision(17);
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            out << mesh.vertices(v, 0) << ' ' << mesh.vertices(v, 1) << ' ' << mesh.vertices(v, 2);
            if (colored)
                for (int c = 0; c < 4; ++c)
                    out << ' ' << static_cast<int>(to_byte(mesh.colors(v, c)));
            out << '\n';
        }
        for (int f = 0; f < mesh.face_count(); ++f)
            out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
    }
    if (!out)
        throw Error("failed writing " + path.string());
}

Mesh read_mesh(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".obj")
        return read_obj(path);
    if (ext == ".ply")
        return read_ply(path);
    throw Error("unknown mesh extension '" + ext + "' for " + path.string());
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh)
{
    const auto ext = path.extension().string();
    if (ext == ".obj")
        write_obj(path, mesh);
    else if (ext == ".ply")
        write_ply(path, mesh);
    else
        throw Error("unknown mesh extension '" + ext + "' for " + path.string());
}

} // namespace mvd
