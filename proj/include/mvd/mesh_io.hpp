#pragma once

#include "mvd/mesh.hpp"

#include <filesystem>

namespace mvd {

/// Positions and triangular faces only; polygons are fan-triangulated.
Mesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Mesh& mesh);

enum class PlyEncoding { ascii, binary_little_endian };

/// PLY with double positions and optional uchar red/green/blue/alpha per vertex.
/// Reading accepts float or double positions in either encoding.
Mesh read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const Mesh& mesh, PlyEncoding encoding = PlyEncoding::binary_little_endian);

/// Dispatches on the file extension (.obj or .ply).
Mesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

} // namespace mvd
