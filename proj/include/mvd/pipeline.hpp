#pragma once

#include "mvd/config.hpp"
#include "mvd/metrics.hpp"
#include "mvd/scenario.hpp"

#include <filesystem>

namespace mvd {

struct PipelineResult {
    Mesh m0;   // after geometry refinement
    Mesh m_g;  // direct unprojection of the given views onto M_0
    Mesh m_c;  // appearance-enhanced
    Mesh m_d;  // deformed toward the input view (colors of M_c)
    Mesh m_out;
    Camera camera;
    bool fidelity_ran = false;
    EvalReport report;
};

/// Geometry refinement, appearance enhancement, camera estimation, fidelity
/// enhancement and the final input unprojection. Writes meshes, fields, loss
/// curves, the estimated camera and the report into `out_dir`.
PipelineResult run_pipeline(const Scenario& scenario, const PipelineConfig& config,
                            const std::filesystem::path& out_dir, bool skip_fidelity = false);

} // namespace mvd
