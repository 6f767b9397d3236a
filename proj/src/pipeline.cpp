#include "mvd/pipeline.hpp"

#include "mvd/image_io.hpp"
#include "mvd/mesh_io.hpp"

#include <json.hpp>

#include <fstream>

namespace mvd {

namespace {

OptimConfig optim(int iterations, double step, std::uint64_t seed, double epsilon = OptimConfig{}.epsilon)
{
    OptimConfig c;
    c.iterations = iterations;
    c.step_size = step;
    c.epsilon = epsilon;
    c.seed = seed;
    return c;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

} // namespace

PipelineResult run_pipeline(const Scenario& scenario, const PipelineConfig& config,
                            const std::filesystem::path& out_dir, bool skip_fidelity)
{
    config.validate();
    std::filesystem::create_directories(out_dir);
    PipelineResult r;

    RefineOptions refine;
    refine.weights = config.refine_weights;
    refine.expansion_delta = config.expansion_delta;
    refine.soft = config.soft();
    RefineResult refined = refine_geometry(
        scenario.initial_mesh, scenario.normal_views, optim(config.iterations_refine, config.step_refine, config.seed),
        refine);
    r.m0 = std::move(refined.mesh);
    refined.log.write_csv(out_dir / "loss_refine.csv");

    AppearanceOptions app;
    app.grid_size = config.grid_size;
    app.unproject.cos_threshold = config.cos_threshold;
    r.m_g = unproject(r.m0, scenario.views, app.unproject);
    AppearanceResult appearance =
        enhance_appearance(r.m0, scenario.views, config.weights,
                           optim(config.iterations_appearance, config.step_appearance, config.seed, config.epsilon_appearance), app);
    r.m_c = appearance.colored;
    appearance.log.write_csv(out_dir / "loss_appearance.csv");
    for (size_t k = 0; k < appearance.fields.size(); ++k) {
        write_field(out_dir / ("field_" + std::to_string(k) + ".json"), appearance.fields[k]);
        write_png(out_dir / ("enhanced_view_" + std::to_string(k) + ".png"), appearance.deformed[k]);
    }

    write_ply(out_dir / "M_0.ply", r.m0);
    write_ply(out_dir / "M_g.ply", r.m_g);
    write_ply(out_dir / "M_c.ply", r.m_c);

    const Mesh* final_mesh = &r.m_c;
    if (!skip_fidelity) {
        CameraSearchOptions search;
        search.refine = optim(config.iterations_camera, config.step_camera, config.seed);
        search.soft = config.soft();
        const CameraEstimate est = estimate_camera(r.m_c, scenario.input.image, config.camera_distance,
                                                   config.camera_fov, config.weights, search);
        r.camera = est.camera;
        est.log.write_csv(out_dir / "loss_camera.csv");

        FidelityOptions fid;
        fid.soft = config.soft();
        fid.input_view_scale = config.input_view_scale;
        fid.unproject.cos_threshold = config.cos_threshold;
        for (size_t k = 0; k < appearance.deformed.size(); ++k)
            fid.views.push_back({appearance.deformed[k], scenario.views[k].camera});
        FidelityResult fidelity = enhance_fidelity(r.m_c, scenario.input.image, r.camera, config.weights,
                                                   optim(config.iterations_fidelity, config.step_fidelity, config.seed),
                                                   fid);
        r.m_d = std::move(fidelity.deformed);
        r.m_out = std::move(fidelity.output);
        r.fidelity_ran = true;
        fidelity.log.write_csv(out_dir / "loss_fidelity.csv");
        write_ply(out_dir / "M_d.ply", r.m_d);
        write_ply(out_dir / "M_out.ply", r.m_out);
        nlohmann::ordered_json cam{{"fov_deg", r.camera.fov_deg},
                                   {"distance", r.camera.distance},
                                   {"elevation_deg", r.camera.elevation_deg},
                                   {"azimuth_deg", r.camera.azimuth_deg},
                                   {"coarse_elevation_deg", est.coarse_elevation},
                                   {"grid_elevation_deg", est.grid_elevation}};
        write_text(out_dir / "camera.json", cam.dump(2) + "\n");
        final_mesh = &r.m_out;
    }

    EvalOptions eval;
    eval.resolution = config.resolution;
    eval.views = config.eval_views;
    eval.samples = config.eval_samples;
    eval.fscore_threshold = config.fscore_threshold;
    eval.seed = config.seed;
    r.report = evaluate(*final_mesh, scenario.gt_mesh, eval);
    std::vector<PosedImage> enhanced;
    for (size_t k = 0; k < appearance.deformed.size(); ++k)
        enhanced.push_back({appearance.deformed[k], scenario.views[k].camera});
    r.report.ghosting = ghosting_metric(r.m_c, enhanced);
    write_text(out_dir / "report.txt", r.report.to_text());
    write_text(out_dir / "report.json", r.report.to_json());
    write_config(out_dir / "config.txt", config);
    return r;
}

} // namespace mvd
