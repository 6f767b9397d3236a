#include "mvd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace mvd {

namespace {

using Slot = std::variant<int*, double*, std::uint64_t*, std::string*>;

std::vector<std::pair<std::string, Slot>> slots(PipelineConfig& c)
{
    return {
        {"resolution", &c.resolution},
        {"grid_size", &c.grid_size},
        {"w1", &c.weights.w1},
        {"w2", &c.weights.w2},
        {"w3", &c.weights.w3},
        {"w4", &c.weights.w4},
        {"w5", &c.weights.w5},
        {"w6", &c.weights.w6},
        {"refine_w_mse", &c.refine_weights.mse},
        {"refine_w_mask", &c.refine_weights.mask},
        {"refine_w_expansion", &c.refine_weights.expansion},
        {"refine_w_laplacian", &c.refine_weights.laplacian},
        {"iterations_appearance", &c.iterations_appearance},
        {"iterations_fidelity", &c.iterations_fidelity},
        {"iterations_camera", &c.iterations_camera},
        {"iterations_refine", &c.iterations_refine},
        {"step_appearance", &c.step_appearance},
        {"epsilon_appearance", &c.epsilon_appearance},
        {"step_fidelity", &c.step_fidelity},
        {"step_camera", &c.step_camera},
        {"step_refine", &c.step_refine},
        {"soft_sigma", &c.soft_sigma},
        {"soft_gamma", &c.soft_gamma},
        {"soft_band", &c.soft_band},
        {"cos_threshold", &c.cos_threshold},
        {"expansion_delta", &c.expansion_delta},
        {"input_view_scale", &c.input_view_scale},
        {"camera_distance", &c.camera_distance},
        {"camera_fov", &c.camera_fov},
        {"eval_views", &c.eval_views},
        {"eval_samples", &c.eval_samples},
        {"fscore_threshold", &c.fscore_threshold},
        {"seed", &c.seed},
        {"output_dir", &c.output_dir},
    };
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error("config key '" + key + "': cannot parse '" + text + "'");
    return value;
}

template <typename T>
std::string format_number(T value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

} // namespace

void PipelineConfig::validate() const
{
    weights.validate();
    for (double w : {refine_weights.mse, refine_weights.mask, refine_weights.expansion, refine_weights.laplacian})
        if (!(w >= 0.0))
            throw Error("refine weights must be nonnegative");
    if (resolution < 16)
        throw Error("resolution must be at least 16");
    if (grid_size < 2)
        throw Error("grid_size must be at least 2");
    for (int n : {iterations_appearance, iterations_fidelity, iterations_camera, iterations_refine})
        if (n < 0)
            throw Error("iteration counts must be >= 0");
    for (double s : {step_appearance, epsilon_appearance, step_fidelity, step_camera, step_refine, soft_sigma,
                     soft_gamma, soft_band, input_view_scale, camera_distance, camera_fov, fscore_threshold})
        if (!(s > 0.0))
            throw Error("step sizes, raster parameters and camera parameters must be positive");
    if (eval_views <= 0 || eval_samples <= 0)
        throw Error("evaluation view and sample counts must be positive");
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value)
{
    for (auto& [name, slot] : slots(config)) {
        if (name != key)
            continue;
        std::visit(
            [&](auto* p) {
                using T = std::remove_pointer_t<decltype(p)>;
                if constexpr (std::is_same_v<T, std::string>)
                    *p = value;
                else
                    *p = parse_number<T>(key, value);
            },
            slot);
        return;
    }
    throw Error("unknown config key '" + key + "'");
}

std::string config_to_text(const PipelineConfig& config)
{
    PipelineConfig copy = config;
    std::ostringstream out;
    for (auto& [name, slot] : slots(copy)) {
        out << name << " = ";
        std::visit(
            [&](auto* p) {
                using T = std::remove_pointer_t<decltype(p)>;
                if constexpr (std::is_same_v<T, std::string>)
                    out << *p;
                else
                    out << format_number(*p);
            },
            slot);
        out << '\n';
    }
    return out.str();
}

PipelineConfig config_from_text(const std::string& text)
{
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
        set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    config.validate();
    return config;
}

PipelineConfig read_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_text(ss.str());
}

void write_config(const std::filesystem::path& path, const PipelineConfig& config)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write config " + path.string());
    out << config_to_text(config);
}

} // namespace mvd
