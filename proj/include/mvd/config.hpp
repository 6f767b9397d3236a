#pragma once

#include "mvd/enhance.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace mvd {

/// Pipeline settings. Text form is one `key = value` per line; `#` starts a
/// comment; unknown keys are rejected. See config_to_text for the key list.
struct PipelineConfig {
    int resolution = 256;
    int grid_size = 20;
    LossWeights weights;
    RefineWeights refine_weights;
    int iterations_appearance = 100;
    int iterations_fidelity = 200;
    int iterations_camera = 100;
    int iterations_refine = 100;
    double step_appearance = 1e-2; // field offsets in normalized image units
    double epsilon_appearance = 3e-3; // Adam epsilon; damps drift in texture-flat regions
    double step_fidelity = 1e-3;
    double step_camera = 0.05;
    double step_refine = 1e-3;
    double soft_sigma = 1.0;
    double soft_gamma = 1e-2;
    double soft_band = 4.0;
    double cos_threshold = 0.1;
    double expansion_delta = 0.0;
    double input_view_scale = 3.0;
    double camera_distance = 4.0;
    double camera_fov = 30.0;
    int eval_views = 24;
    int eval_samples = 100000;
    double fscore_threshold = 0.2;
    std::uint64_t seed = 0;
    std::string output_dir;

    void validate() const;
    SoftRasterParams soft() const { return {soft_sigma, soft_gamma, soft_band}; }
    bool operator==(const PipelineConfig&) const = default;
};

std::string config_to_text(const PipelineConfig& config);
PipelineConfig config_from_text(const std::string& text);
PipelineConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const PipelineConfig& config);

/// Sets one key from its text value; throws on unknown keys or bad values.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

} // namespace mvd
