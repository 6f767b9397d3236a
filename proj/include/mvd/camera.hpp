#pragma once

#include "mvd/mesh.hpp"

namespace mvd {

/// Perspective camera orbiting the origin and looking at it. World up is +z;
/// azimuth rotates about +z starting from the +x axis, elevation tilts toward +z.
struct Camera {
    double fov_deg = 30.0;
    double distance = 4.0;
    double elevation_deg = 0.0;
    double azimuth_deg = 0.0;
    int width = 256;
    int height = 256;

    void validate() const;

    Vec3 position() const;
    Vec3 forward() const; // unit, from the camera toward the origin
    Vec3 right() const;
    Vec3 up() const;

    /// Focal length in pixels; the field of view spans the image width.
    double focal_px() const;

    bool operator==(const Camera&) const = default;
};

/// Screen position in continuous pixel units (pixel (i, j) covers [i, i+1) x [j, j+1),
/// y grows downward) and camera-space depth along the view axis.
struct Projection {
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0;
    bool in_front = false; // depth > 0
};

Projection project(const Vec3& point, const Camera& camera);

/// d(x, y, depth)/d(world point), rows x, y, depth.
Mat3 projection_jacobian(const Vec3& point, const Camera& camera);

/// World-space vector expressed in camera axes (right, up, toward-camera).
Vec3 to_camera_axes(const Vec3& v, const Camera& camera);

/// Default six-view table: elevations 20/-10 alternating, azimuths 30..330 step 60.
std::vector<Camera> default_view_cameras(int resolution);

} // namespace mvd
