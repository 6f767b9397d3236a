#pragma once

#include "mvd/mesh.hpp"
#include "mvd/scenario.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace mvd::test {

inline Mesh right_triangle()
{
    Mesh m;
    m.vertices.resize(3, 3);
    m.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
    m.faces.resize(1, 3);
    m.faces << 0, 1, 2;
    return m;
}

// Unit square in z=0, two triangles, counter-clockwise seen from +z.
inline Mesh flat_quad(double half = 1.0)
{
    Mesh m;
    m.vertices.resize(4, 3);
    m.vertices << -half, -half, 0, half, -half, 0, half, half, 0, -half, half, 0;
    m.faces.resize(2, 3);
    m.faces << 0, 1, 2, 0, 2, 3;
    return m;
}

// Center vertex 0 with a closed ring of n vertices in z=0.
inline Mesh fan(int n, double center_height = 0.0)
{
    Mesh m;
    m.vertices.resize(n + 1, 3);
    m.vertices.row(0) << 0, 0, center_height;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * 3.14159265358979323846 * i / n;
        m.vertices.row(i + 1) << std::cos(a), std::sin(a), 0;
    }
    m.faces.resize(n, 3);
    for (int i = 0; i < n; ++i)
        m.faces.row(i) << 0, 1 + i, 1 + (i + 1) % n;
    return m;
}

// Regular n x n vertex grid over [-1,1]^2 in z=0.
inline Mesh planar_grid(int n)
{
    Mesh m;
    m.vertices.resize(n * n, 3);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m.vertices.row(j * n + i) << -1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1), 0.0;
    m.faces.resize(2 * (n - 1) * (n - 1), 3);
    int f = 0;
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            const int a = j * n + i, b = a + 1, c = a + n, d = c + 1;
            m.faces.row(f++) << a, b, d;
            m.faces.row(f++) << a, d, c;
        }
    return m;
}

// Icosphere with radial noise; closed, genus 0, no slivers for amp < 0.2.
inline Mesh noisy_sphere(int subdivisions, double amp, std::uint64_t seed)
{
    Mesh m = make_icosphere(subdivisions);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amp, amp);
    for (int v = 0; v < m.vertex_count(); ++v)
        m.vertices.row(v) *= 1.0 + u(rng);
    return m;
}

inline ColorMatrix random_colors(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ColorMatrix c(n, 4);
    for (int i = 0; i < n; ++i)
        c.row(i) << u(rng), u(rng), u(rng), 1.0;
    return c;
}

inline std::filesystem::path temp_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("mvd_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace mvd::test
