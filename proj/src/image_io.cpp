#include "mvd/image_io.hpp"

#include "mvd/mesh.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace mvd {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageRGBA read_png(const std::filesystem::path& path)
{
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw Error("cannot read PNG " + path.string() + ": " + img.message);
    img.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&img);
        throw Error("cannot decode PNG " + path.string() + ": " + img.message);
    }
    ImageRGBA out(static_cast<int>(img.width), static_cast<int>(img.height));
    auto data = out.data();
    for (size_t i = 0; i < bytes.size(); ++i)
        data[i] = bytes[i] / 255.0;
    return out;
}

void write_png(const std::filesystem::path& path, const ImageRGBA& image)
{
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> bytes(image.data().size());
    for (size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.data()[i], 0.0, 1.0) * 255.0));
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file)
        throw Error("cannot write " + path.string());
    if (!png_image_write_to_stdio(&img, file.get(), 0, bytes.data(), 0, nullptr))
        throw Error("cannot encode PNG " + path.string() + ": " + img.message);
}

void write_depth(const std::filesystem::path& path, int width, int height, const std::vector<double>& depth)
{
    if (depth.size() != static_cast<size_t>(width) * height)
        throw Error("depth buffer size does not match " + std::to_string(width) + "x" + std::to_string(height));
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write("MVDDEPTH", 8);
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (double d : depth) {
        const float f = static_cast<float>(d);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}

std::vector<double> read_depth(const std::filesystem::path& path, int* width, int* height)
{
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    std::uint32_t dims[2];
    if (!in.read(magic, 8) || std::memcmp(magic, "MVDDEPTH", 8) != 0 ||
        !in.read(reinterpret_cast<char*>(dims), sizeof(dims)))
        throw Error(path.string() + " is not a depth dump");
    std::vector<double> depth(static_cast<size_t>(dims[0]) * dims[1]);
    for (auto& d : depth) {
        float f;
        if (!in.read(reinterpret_cast<char*>(&f), sizeof(f)))
            throw Error("truncated depth dump " + path.string());
        d = f;
    }
    *width = static_cast<int>(dims[0]);
    *height = static_cast<int>(dims[1]);
    return depth;
}

} // namespace mvd
