#include "mvd/scenario.hpp"

#include "mvd/image_io.hpp"
#include "mvd/mesh_io.hpp"
#include "mvd/operators.hpp"
#include "mvd/raster.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace mvd {

namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

template <typename E>
E parse_enum(const std::string& name, std::initializer_list<std::pair<const char*, E>> table, const char* what)
{
    for (const auto& [key, value] : table)
        if (name == key)
            return value;
    std::string msg = std::string("unknown ") + what + " '" + name + "' (expected";
    for (const auto& [key, value] : table)
        msg += std::string(" ") + key;
    throw Error(msg + ")");
}

void normalize_unit_box(Mesh& mesh)
{
    const Vec3 lo = mesh.vertices.colwise().minCoeff().transpose();
    const Vec3 hi = mesh.vertices.colwise().maxCoeff().transpose();
    const Vec3 mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo).maxCoeff();
    mesh.vertices.rowwise() -= mid.transpose();
    mesh.vertices /= half;
}

Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    return v.normalized();
}

void apply_pattern(Mesh& mesh, ColorPattern pattern, std::mt19937_64& rng)
{
    const int nv = mesh.vertex_count();
    mesh.colors.resize(nv, 4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    switch (pattern) {
    case ColorPattern::checker: {
        const double phase = u01(rng) * 2.0 * kPi;
        const Eigen::RowVector3d a(0.92, 0.26, 0.12), b(0.12, 0.32, 0.88);
        for (int v = 0; v < nv; ++v) {
            const Vec3 p = mesh.vertex(v);
            const double theta = std::atan2(p.y(), p.x()) + phase;
            const double phi = std::asin(std::clamp(p.z() / std::max(p.norm(), 1e-12), -1.0, 1.0));
            const int cu = static_cast<int>(std::floor(theta / (2.0 * kPi) * 8.0));
            const int cv = static_cast<int>(std::floor((phi + kPi / 2) / kPi * 6.0));
            mesh.colors.row(v) << ((cu + cv) % 2 == 0 ? a : b), 1.0;
        }
        break;
    }
    case ColorPattern::gradient:
        for (int v = 0; v < nv; ++v) {
            const Vec3 c = (0.5 * mesh.vertex(v).array() + 0.5).min(1.0).max(0.0);
            mesh.colors.row(v) << c.transpose(), 1.0;
        }
        break;
    case ColorPattern::spots: {
        constexpr int kSpots = 12;
        std::vector<Vec3> centers, colors;
        for (int i = 0; i < kSpots; ++i) {
            centers.push_back(random_unit(rng));
            colors.emplace_back(u01(rng), u01(rng), u01(rng));
        }
        for (int v = 0; v < nv; ++v) {
            const Vec3 d = mesh.vertex(v).normalized();
            Vec3 c(0.86, 0.84, 0.78);
            double best = 0.45; // angular spot radius, radians
            for (int i = 0; i < kSpots; ++i) {
                const double ang = std::acos(std::clamp(d.dot(centers[i]), -1.0, 1.0));
                if (ang < best) {
                    best = ang;
                    c = colors[i];
                }
            }
            mesh.colors.row(v) << c.transpose(), 1.0;
        }
        break;
    }
    }
}

} // namespace

Shape parse_shape(const std::string& name)
{
    return parse_enum<Shape>(
        name, {{"sphere", Shape::sphere}, {"torus", Shape::torus}, {"blob", Shape::blob}, {"cube", Shape::cube}},
        "shape");
}

ColorPattern parse_pattern(const std::string& name)
{
    return parse_enum<ColorPattern>(
        name,
        {{"checker", ColorPattern::checker}, {"gradient", ColorPattern::gradient}, {"spots", ColorPattern::spots}},
        "color pattern");
}

DegradeMode parse_degrade_mode(const std::string& name)
{
    return parse_enum<DegradeMode>(name,
                                   {{"decimate", DegradeMode::decimate},
                                    {"smooth", DegradeMode::smooth},
                                    {"blur_colors", DegradeMode::blur_colors},
                                    {"shape_offset", DegradeMode::shape_offset}},
                                   "degrade mode");
}

std::string to_string(Shape shape)
{
    switch (shape) {
    case Shape::sphere: return "sphere";
    case Shape::torus: return "torus";
    case Shape::blob: return "blob";
    case Shape::cube: return "cube";
    }
    return "?";
}

std::string to_string(ColorPattern pattern)
{
    switch (pattern) {
    case ColorPattern::checker: return "checker";
    case ColorPattern::gradient: return "gradient";
    case ColorPattern::spots: return "spots";
    }
    return "?";
}

Mesh make_icosphere(int subdivisions)
{
    if (subdivisions < 0 || subdivisions > 6)
        throw Error("icosphere subdivisions must be in [0, 6]");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts)
        v.normalize();
    std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end())
                return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const int id = static_cast<int>(verts.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces.swap(next);
    }
    Mesh m;
    m.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i)
        m.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
    m.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i)
        m.faces.row(static_cast<Eigen::Index>(i)) << faces[i][0], faces[i][1], faces[i][2];
    return m;
}

namespace {

Mesh make_torus(int subdivisions)
{
    const int nu = 4 << subdivisions, nv = 2 << subdivisions;
    constexpr double major = 1.0, minor = 0.4;
    Mesh m;
    m.vertices.resize(nu * nv, 3);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const double u = 2 * kPi * i / nu, v = 2 * kPi * j / nv;
            m.vertices.row(i * nv + j) << (major + minor * std::cos(v)) * std::cos(u),
                (major + minor * std::cos(v)) * std::sin(u), minor * std::sin(v);
        }
    m.faces.resize(2 * nu * nv, 3);
    int f = 0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            const int a = i * nv + j, b = ((i + 1) % nu) * nv + j;
            const int c = ((i + 1) % nu) * nv + (j + 1) % nv, d = i * nv + (j + 1) % nv;
            m.faces.row(f++) << a, b, c;
            m.faces.row(f++) << a, c, d;
        }
    return m;
}

} // namespace

Mesh make_gt_mesh(Shape shape, int subdivisions, ColorPattern pattern, std::uint64_t seed)
{
    if (subdivisions < 0 || subdivisions > 6)
        throw Error("subdivisions must be in [0, 6]");
    std::mt19937_64 rng(seed);
    Mesh m;
    switch (shape) {
    case Shape::sphere:
        m = make_icosphere(subdivisions);
        break;
    case Shape::torus:
        m = make_torus(subdivisions);
        break;
    case Shape::blob: {
        m = make_icosphere(subdivisions);
        std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
        std::vector<std::pair<Vec3, double>> waves;
        for (int i = 0; i < 4; ++i)
            waves.emplace_back(random_unit(rng) * (1.5 + 0.5 * i), phase(rng));
        for (int v = 0; v < m.vertex_count(); ++v) {
            const Vec3 d = m.vertex(v);
            double r = 1.0;
            for (const auto& [k, ph] : waves)
                r += 0.07 * std::sin(k.dot(d) + ph);
            m.vertices.row(v) *= r;
        }
        break;
    }
    case Shape::cube:
        m = make_icosphere(subdivisions);
        for (int v = 0; v < m.vertex_count(); ++v)
            m.vertices.row(v) /= m.vertices.row(v).cwiseAbs().maxCoeff();
        break;
    }
    normalize_unit_box(m);
    apply_pattern(m, pattern, rng);
    m.validate();
    return m;
}

std::vector<PosedImage> render_views(const Mesh& mesh, int resolution)
{
    std::vector<PosedImage> out;
    for (const Camera& cam : default_view_cameras(resolution))
        out.push_back({render(mesh, cam, RenderMode::hard).image, cam});
    return out;
}

std::vector<PosedImage> render_normal_views(const Mesh& mesh, int resolution)
{
    std::vector<PosedImage> out;
    for (const Camera& cam : default_view_cameras(resolution))
        out.push_back({render_normal_map(mesh, cam, RenderMode::hard), cam});
    return out;
}

PerturbedViews perturb_views(std::span<const PosedImage> views, double max_offset_px, std::uint64_t seed,
                             int grid_size)
{
    if (!(max_offset_px >= 0.0))
        throw Error("max offset must be nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PerturbedViews out;
    for (const auto& view : views) {
        DeformationField2D raw =
            DeformationField2D::zero_for_image(grid_size, view.image.width(), view.image.height());
        for (Eigen::Index r = 0; r < raw.offsets.rows(); ++r)
            for (int c = 0; c < 2; ++c)
                raw.offsets(r, c) = u(rng);
        DeformationField2D field = raw;
        for (int j = 0; j < grid_size; ++j)
            for (int i = 0; i < grid_size; ++i) {
                Eigen::RowVector2d sum = raw.offsets.row(j * grid_size + i);
                int n = 1;
                const int ni[4] = {i - 1, i + 1, i, i}, nj[4] = {j, j, j - 1, j + 1};
                for (int k = 0; k < 4; ++k)
                    if (ni[k] >= 0 && nj[k] >= 0 && ni[k] < grid_size && nj[k] < grid_size) {
                        sum += raw.offsets.row(nj[k] * grid_size + ni[k]);
                        ++n;
                    }
                field.offsets.row(j * grid_size + i) = sum / n;
            }
        const double peak = field.offsets.cwiseAbs().maxCoeff();
        if (max_offset_px == 0.0 || peak == 0.0)
            field.offsets.setZero();
        else
            field.offsets *= max_offset_px / peak;
        out.views.push_back({deform_image(view.image, field), view.camera});
        out.fields.push_back(std::move(field));
    }
    return out;
}

namespace {

Mesh decimate(const Mesh& mesh, double fraction)
{
    const int nv = mesh.vertex_count();
    const int target = std::max(4, static_cast<int>(std::lround((1.0 - fraction) * nv)));
    VertexMatrix pos = mesh.vertices;
    ColorMatrix col = mesh.colors;
    std::vector<std::array<int, 3>> faces(static_cast<size_t>(mesh.face_count()));
    for (int f = 0; f < mesh.face_count(); ++f)
        faces[f] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
    std::vector<char> face_alive(faces.size(), 1);
    std::vector<std::set<int>> incident(static_cast<size_t>(nv));
    for (size_t f = 0; f < faces.size(); ++f)
        for (int v : faces[f])
            incident[v].insert(static_cast<int>(f));
    int alive = nv;

    auto neighbors = [&](int v) {
        std::set<int> n;
        for (int f : incident[v])
            for (int u : faces[f])
                if (u != v)
                    n.insert(u);
        return n;
    };
    auto normal_of = [&](const std::array<int, 3>& f) {
        return Vec3((pos.row(f[1]) - pos.row(f[0])).cross(pos.row(f[2]) - pos.row(f[0])).transpose());
    };

    while (alive > target) {
        std::vector<std::tuple<double, int, int>> edges;
        for (size_t f = 0; f < faces.size(); ++f) {
            if (!face_alive[f])
                continue;
            for (int k = 0; k < 3; ++k) {
                const int a = std::min(faces[f][k], faces[f][(k + 1) % 3]);
                const int b = std::max(faces[f][k], faces[f][(k + 1) % 3]);
                edges.emplace_back((pos.row(a) - pos.row(b)).squaredNorm(), a, b);
            }
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        std::vector<char> touched(static_cast<size_t>(nv), 0);
        bool progress = false;
        for (const auto& [len, a, b] : edges) {
            if (alive <= target)
                break;
            if (touched[a] || touched[b])
                continue;
            const std::set<int> na = neighbors(a), nb = neighbors(b);
            std::vector<int> common;
            std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
            if (common.size() != 2)
                continue; // link condition
            const Eigen::RowVector3d mid = 0.5 * (pos.row(a) + pos.row(b));
            // Reject collapses that flip or flatten any surviving face.
            bool ok = true;
            std::set<int> around = incident[a];
            around.insert(incident[b].begin(), incident[b].end());
            for (int f : around) {
                const auto& tri = faces[f];
                const bool has_a = std::count(tri.begin(), tri.end(), a) > 0;
                const bool has_b = std::count(tri.begin(), tri.end(), b) > 0;
                if (has_a && has_b)
                    continue;
                const Vec3 before = normal_of(tri);
                const int moved = has_a ? a : b;
                const Eigen::RowVector3d keep = pos.row(moved);
                pos.row(moved) = mid;
                const Vec3 after = normal_of(tri);
                pos.row(moved) = keep;
                if (after.norm() < 2 * kMinFaceArea || before.normalized().dot(after.normalized()) < 0.3) {
                    ok = false;
                    break;
                }
            }
            if (!ok)
                continue;
            pos.row(a) = mid;
            if (col.rows() > 0)
                col.row(a) = 0.5 * (col.row(a) + col.row(b));
            for (int f : incident[b]) {
                auto& tri = faces[f];
                if (std::count(tri.begin(), tri.end(), a) > 0) {
                    face_alive[f] = 0;
                    for (int v : tri)
                        if (v != b)
                            incident[v].erase(f);
                    continue;
                }
                for (int& v : tri)
                    if (v == b)
                        v = a;
                incident[a].insert(f);
            }
            incident[b].clear();
            --alive;
            progress = true;
            touched[a] = touched[b] = 1;
            for (int n : na)
                touched[n] = 1;
            for (int n : nb)
                touched[n] = 1;
        }
        if (!progress)
            break;
    }

    std::vector<int> remap(static_cast<size_t>(nv), -1);
    int next = 0;
    for (size_t f = 0; f < faces.size(); ++f)
        if (face_alive[f])
            for (int v : faces[f])
                if (remap[v] < 0)
                    remap[v] = -2;
    for (int v = 0; v < nv; ++v)
        if (remap[v] == -2)
            remap[v] = next++;
    Mesh out;
    out.vertices.resize(next, 3);
    if (col.rows() > 0)
        out.colors.resize(next, 4);
    for (int v = 0; v < nv; ++v)
        if (remap[v] >= 0) {
            out.vertices.row(remap[v]) = pos.row(v);
            if (col.rows() > 0)
                out.colors.row(remap[v]) = col.row(v);
        }
    const auto nf = std::count(face_alive.begin(), face_alive.end(), 1);
    out.faces.resize(nf, 3);
    int fi = 0;
    for (size_t f = 0; f < faces.size(); ++f)
        if (face_alive[f])
            out.faces.row(fi++) << remap[faces[f][0]], remap[faces[f][1]], remap[faces[f][2]];
    return out;
}

} // namespace

Degraded degrade_mesh(const Mesh& mesh, DegradeMode mode, double amount, std::uint64_t seed, const Vec3& fixed_axis)
{
    mesh.validate();
    if (!(amount >= 0.0) || !std::isfinite(amount))
        throw Error("degrade amount must be finite and nonnegative");
    Degraded out{mesh, VertexMatrix::Zero(mesh.vertex_count(), 3)};
    if (amount == 0.0)
        return out;
    const auto adj = vertex_adjacency(mesh.vertex_count(), mesh.faces);
    switch (mode) {
    case DegradeMode::decimate:
        if (amount >= 1.0)
            throw Error("decimation fraction must be below 1");
        out.mesh = decimate(mesh, amount);
        out.displacement.resize(0, 3);
        break;
    case DegradeMode::smooth:
        for (long it = 0; it < std::lround(amount); ++it) {
            VertexMatrix next = out.mesh.vertices;
            for (int v = 0; v < mesh.vertex_count(); ++v) {
                Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
                for (int n : adj[v])
                    mean += out.mesh.vertices.row(n);
                mean /= static_cast<double>(adj[v].size());
                next.row(v) += 0.5 * (mean - out.mesh.vertices.row(v));
            }
            out.mesh.vertices = next;
        }
        out.displacement = out.mesh.vertices - mesh.vertices;
        break;
    case DegradeMode::blur_colors:
        if (!mesh.has_colors())
            throw Error("blur_colors needs a colored mesh");
        for (long it = 0; it < std::lround(amount); ++it) {
            ColorMatrix next = out.mesh.colors;
            for (int v = 0; v < mesh.vertex_count(); ++v) {
                Eigen::RowVector4d sum = out.mesh.colors.row(v);
                for (int n : adj[v])
                    sum += out.mesh.colors.row(n);
                next.row(v) = sum / static_cast<double>(adj[v].size() + 1);
            }
            out.mesh.colors = next;
        }
        break;
    case DegradeMode::shape_offset: {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
        struct Wave {
            Vec3 dir, k;
            double phi;
        };
        std::vector<Wave> waves;
        for (int i = 0; i < 3; ++i) {
            Wave w;
            w.dir = random_unit(rng);
            w.k = random_unit(rng) * (1.0 + 0.5 * i);
            w.phi = phase(rng);
            waves.push_back(w);
        }
        VertexMatrix d(mesh.vertex_count(), 3);
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            Vec3 s = Vec3::Zero();
            for (const auto& w : waves)
                s += w.dir * std::sin(w.k.dot(mesh.vertex(v)) + w.phi);
            d.row(v) = s.transpose();
        }
        if (fixed_axis.squaredNorm() > 0.0) {
            const Vec3 a = fixed_axis.normalized();
            d -= (d * a) * a.transpose();
        }
        const double peak = d.rowwise().norm().maxCoeff();
        if (peak > 0.0)
            d *= amount * bbox_diagonal(mesh.vertices) / peak;
        out.mesh.vertices += d;
        out.displacement = d;
        break;
    }
    }
    out.mesh.validate();
    return out;
}

ScenarioOptions scenario_preset(const std::string& name)
{
    ScenarioOptions o;
    if (name == "sphere") {
        o.shape = Shape::sphere;
        o.pattern = ColorPattern::checker;
    } else if (name == "torus") {
        o.shape = Shape::torus;
        o.pattern = ColorPattern::checker;
    } else if (name == "blob") {
        o.shape = Shape::blob;
        o.pattern = ColorPattern::checker;
    } else if (name == "cube") {
        o.shape = Shape::cube;
        o.pattern = ColorPattern::checker;
    } else {
        throw Error("unknown scenario '" + name + "' (expected sphere, torus, blob or cube)");
    }
    return o;
}

Scenario make_scenario(const std::string& name, std::uint64_t seed)
{
    return make_scenario(name, scenario_preset(name), seed);
}

Scenario make_scenario(const std::string& name, const ScenarioOptions& options, std::uint64_t seed)
{
    Scenario s;
    s.name = name;
    s.seed = seed;
    s.options = options;
    s.gt_mesh = make_gt_mesh(options.shape, options.subdivisions, options.pattern, seed);
    s.clean_views = render_views(s.gt_mesh, options.resolution);
    PerturbedViews p = perturb_views(s.clean_views, options.max_offset_px, seed + 1, options.grid_size);
    s.views = std::move(p.views);
    s.injected_fields = std::move(p.fields);
    s.normal_views = render_normal_views(s.gt_mesh, options.resolution);
    Camera cam;
    cam.elevation_deg = options.input_elevation;
    cam.width = cam.height = options.resolution;
    // The offset lies in the input image plane, the part a single view can observe.
    const Vec3 axis = options.offset_in_view_plane ? cam.forward() : Vec3::Zero();
    Degraded offset = degrade_mesh(s.gt_mesh, DegradeMode::shape_offset, options.shape_offset, seed + 2, axis);
    s.shape_displacement = offset.displacement;
    s.initial_mesh = degrade_mesh(offset.mesh, DegradeMode::blur_colors, options.blur_iterations, seed + 3).mesh;
    s.input = {render(s.gt_mesh, cam, RenderMode::hard).image, cam};
    return s;
}

namespace {

json camera_json(const Camera& c)
{
    return json{{"fov_deg", c.fov_deg},       {"distance", c.distance}, {"elevation_deg", c.elevation_deg},
                {"azimuth_deg", c.azimuth_deg}, {"width", c.width},       {"height", c.height}};
}

Camera camera_from_json(const json& j)
{
    Camera c;
    c.fov_deg = j.at("fov_deg").get<double>();
    c.distance = j.at("distance").get<double>();
    c.elevation_deg = j.at("elevation_deg").get<double>();
    c.azimuth_deg = j.at("azimuth_deg").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.validate();
    return c;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string indexed(const char* stem, size_t k, const char* ext)
{
    return std::string(stem) + "_" + std::to_string(k) + ext;
}

} // namespace

void write_scenario(const std::filesystem::path& dir, const Scenario& s)
{
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["name"] = s.name;
    manifest["seed"] = s.seed;
    manifest["options"] = {{"shape", to_string(s.options.shape)},
                           {"pattern", to_string(s.options.pattern)},
                           {"subdivisions", s.options.subdivisions},
                           {"resolution", s.options.resolution},
                           {"max_offset_px", s.options.max_offset_px},
                           {"grid_size", s.options.grid_size},
                           {"shape_offset", s.options.shape_offset},
                           {"offset_in_view_plane", s.options.offset_in_view_plane},
                           {"blur_iterations", s.options.blur_iterations},
                           {"input_elevation", s.options.input_elevation}};
    manifest["gt_mesh"] = "gt_mesh.ply";
    manifest["initial_mesh"] = "initial_mesh.ply";
    manifest["displacement"] = "displacement.json";
    write_ply(dir / "gt_mesh.ply", s.gt_mesh);
    write_ply(dir / "initial_mesh.ply", s.initial_mesh);
    json views = json::array();
    for (size_t k = 0; k < s.views.size(); ++k) {
        json v;
        v["image"] = indexed("view", k, ".png");
        v["clean_image"] = indexed("clean_view", k, ".png");
        v["normal_map"] = indexed("normal", k, ".png");
        v["field"] = indexed("field", k, ".json");
        v["camera"] = camera_json(s.views[k].camera);
        write_png(dir / v["image"].get<std::string>(), s.views[k].image);
        write_png(dir / v["clean_image"].get<std::string>(), s.clean_views[k].image);
        write_png(dir / v["normal_map"].get<std::string>(), s.normal_views[k].image);
        write_field(dir / v["field"].get<std::string>(), s.injected_fields[k]);
        views.push_back(v);
    }
    manifest["views"] = views;
    manifest["input"] = {{"image", "input.png"}, {"camera", camera_json(s.input.camera)}};
    write_png(dir / "input.png", s.input.image);
    std::vector<double> flat(s.shape_displacement.data(), s.shape_displacement.data() + s.shape_displacement.size());
    write_text(dir / "displacement.json", json(flat).dump() + "\n");
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Scenario read_scenario(const std::filesystem::path& dir)
{
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw Error("scenario bundle is missing " + manifest_path.string());
    const json m = json::parse(read_text(manifest_path));

    std::vector<std::string> files = {m.at("gt_mesh").get<std::string>(), m.at("initial_mesh").get<std::string>(),
                                      m.at("displacement").get<std::string>(),
                                      m.at("input").at("image").get<std::string>()};
    for (const auto& v : m.at("views"))
        for (const char* key : {"image", "clean_image", "normal_map", "field"})
            files.push_back(v.at(key).get<std::string>());
    std::string missing;
    for (const auto& f : files)
        if (!std::filesystem::exists(dir / f))
            missing += " " + f;
    if (!missing.empty())
        throw Error("scenario bundle " + dir.string() + " is missing:" + missing);

    Scenario s;
    s.name = m.at("name").get<std::string>();
    s.seed = m.at("seed").get<std::uint64_t>();
    const json& o = m.at("options");
    s.options.shape = parse_shape(o.at("shape").get<std::string>());
    s.options.pattern = parse_pattern(o.at("pattern").get<std::string>());
    s.options.subdivisions = o.at("subdivisions").get<int>();
    s.options.resolution = o.at("resolution").get<int>();
    s.options.max_offset_px = o.at("max_offset_px").get<double>();
    s.options.grid_size = o.at("grid_size").get<int>();
    s.options.shape_offset = o.at("shape_offset").get<double>();
    s.options.offset_in_view_plane = o.at("offset_in_view_plane").get<bool>();
    s.options.blur_iterations = o.at("blur_iterations").get<int>();
    s.options.input_elevation = o.at("input_elevation").get<double>();
    s.gt_mesh = read_ply(dir / m.at("gt_mesh").get<std::string>());
    s.initial_mesh = read_ply(dir / m.at("initial_mesh").get<std::string>());
    for (const auto& v : m.at("views")) {
        const Camera cam = camera_from_json(v.at("camera"));
        s.views.push_back({read_png(dir / v.at("image").get<std::string>()), cam});
        s.clean_views.push_back({read_png(dir / v.at("clean_image").get<std::string>()), cam});
        s.normal_views.push_back({read_png(dir / v.at("normal_map").get<std::string>()), cam});
        s.injected_fields.push_back(read_field(dir / v.at("field").get<std::string>()));
    }
    s.input = {read_png(dir / m.at("input").at("image").get<std::string>()),
               camera_from_json(m.at("input").at("camera"))};
    const auto flat = json::parse(read_text(dir / m.at("displacement").get<std::string>())).get<std::vector<double>>();
    if (flat.size() != static_cast<size_t>(s.gt_mesh.vertex_count()) * 3)
        throw Error("displacement.json does not match the ground-truth vertex count");
    s.shape_displacement = Eigen::Map<const VertexMatrix>(flat.data(), s.gt_mesh.vertex_count(), 3);
    return s;
}

} // namespace mvd
