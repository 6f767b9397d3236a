#include "mvd/camera.hpp"

#include <cmath>
#include <numbers>

namespace mvd {

namespace {

double rad(double deg)
{
    return deg * std::numbers::pi / 180.0;
}

} // namespace

void Camera::validate() const
{
    if (!(fov_deg > 0.0 && fov_deg < 180.0))
        throw Error("camera fov must lie in (0, 180) degrees");
    if (!(distance > 0.0))
        throw Error("camera distance must be positive");
    if (!std::isfinite(elevation_deg) || !std::isfinite(azimuth_deg))
        throw Error("camera angles must be finite");
    if (width < 8 || height < 8)
        throw Error("camera resolution must be at least 8x8");
}

Vec3 Camera::position() const
{
    const double e = rad(elevation_deg), a = rad(azimuth_deg);
    return distance * Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
}

Vec3 Camera::forward() const
{
    const double e = rad(elevation_deg), a = rad(azimuth_deg);
    return -Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
}

Vec3 Camera::right() const
{
    const double a = rad(azimuth_deg);
    return {-std::sin(a), std::cos(a), 0.0};
}

Vec3 Camera::up() const
{
    const double e = rad(elevation_deg), a = rad(azimuth_deg);
    return {-std::sin(e) * std::cos(a), -std::sin(e) * std::sin(a), std::cos(e)};
}

double Camera::focal_px() const
{
    return 0.5 * width / std::tan(0.5 * rad(fov_deg));
}

Projection project(const Vec3& point, const Camera& camera)
{
    const Vec3 rel = point - camera.position();
    const double xc = rel.dot(camera.right()), yc = rel.dot(camera.up()), zc = rel.dot(camera.forward());
    const double f = camera.focal_px();
    Projection p;
    p.depth = zc;
    p.in_front = zc > 0.0;
    p.x = 0.5 * camera.width + f * xc / zc;
    p.y = 0.5 * camera.height - f * yc / zc;
    return p;
}

Mat3 projection_jacobian(const Vec3& point, const Camera& camera)
{
    const Vec3 rel = point - camera.position();
    const Vec3 r = camera.right(), u = camera.up(), fw = camera.forward();
    const double xc = rel.dot(r), yc = rel.dot(u), zc = rel.dot(fw);
    const double f = camera.focal_px();
    Mat3 j;
    j.row(0) = (f / zc) * r.transpose() - (f * xc / (zc * zc)) * fw.transpose();
    j.row(1) = -(f / zc) * u.transpose() + (f * yc / (zc * zc)) * fw.transpose();
    j.row(2) = fw.transpose();
    return j;
}

Vec3 to_camera_axes(const Vec3& v, const Camera& camera)
{
    return {v.dot(camera.right()), v.dot(camera.up()), -v.dot(camera.forward())};
}

std::vector<Camera> default_view_cameras(int resolution)
{
    static constexpr double elevations[6] = {20.0, -10.0, 20.0, -10.0, 20.0, -10.0};
    static constexpr double azimuths[6] = {30.0, 90.0, 150.0, 210.0, 270.0, 330.0};
    std::vector<Camera> cams;
    for (int k = 0; k < 6; ++k) {
        Camera c;
        c.elevation_deg = elevations[k];
        c.azimuth_deg = azimuths[k];
        c.width = c.height = resolution;
        cams.push_back(c);
    }
    return cams;
}

} // namespace mvd
