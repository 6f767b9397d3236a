// Command-line front end: scenario generation, the individual enhancement
// stages, evaluation and the full pipeline.

#include "mvd/config.hpp"
#include "mvd/image_io.hpp"
#include "mvd/mesh_io.hpp"
#include "mvd/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using namespace mvd;

fs::path default_out(const std::string& sub)
{
    if (const char* env = std::getenv("MVD_OUTPUT_DIR"); env && *env)
        return fs::path(env) / sub;
    return fs::path("out") / sub;
}

struct ConfigFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<int> iterations_appearance, iterations_fidelity, iterations_camera, iterations_refine;
    std::optional<std::uint64_t> seed;
    std::optional<int> resolution;

    void attach(CLI::App* app)
    {
        app->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "override one config key (key=value), repeatable");
        app->add_option("--iterations-appearance", iterations_appearance);
        app->add_option("--iterations-fidelity", iterations_fidelity);
        app->add_option("--iterations-camera", iterations_camera);
        app->add_option("--iterations-refine", iterations_refine);
        app->add_option("--seed", seed);
        app->add_option("--resolution", resolution, "evaluation render resolution");
    }

    PipelineConfig resolve() const
    {
        PipelineConfig c = config_path.empty() ? PipelineConfig{} : read_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw Error("--set expects key=value, got '" + kv + "'");
            set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (iterations_appearance)
            c.iterations_appearance = *iterations_appearance;
        if (iterations_fidelity)
            c.iterations_fidelity = *iterations_fidelity;
        if (iterations_camera)
            c.iterations_camera = *iterations_camera;
        if (iterations_refine)
            c.iterations_refine = *iterations_refine;
        if (seed)
            c.seed = *seed;
        if (resolution)
            c.resolution = *resolution;
        c.validate();
        return c;
    }
};

OptimConfig optim(int iterations, double step, std::uint64_t seed, double epsilon = OptimConfig{}.epsilon)
{
    OptimConfig o;
    o.iterations = iterations;
    o.step_size = step;
    o.epsilon = epsilon;
    o.seed = seed;
    return o;
}

fs::path out_or_default(const std::string& out, const char* sub)
{
    return out.empty() ? default_out(sub) : fs::path(out);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multiview mesh enhancement: 2D field appearance repair, Jacobian-field fidelity deformation."};
    app.require_subcommand(1);

    // generate-scenario
    auto* gen = app.add_subcommand("generate-scenario", "write a synthetic scenario bundle");
    std::string gen_name, gen_out;
    std::uint64_t gen_seed = 0;
    std::optional<int> gen_subdiv, gen_res;
    gen->add_option("name", gen_name, "sphere, torus, blob or cube")->required();
    gen->add_option("--seed", gen_seed);
    gen->add_option("--subdivisions", gen_subdiv, "mesh subdivision level (default 5)")->check(CLI::Range(0, 6));
    gen->add_option("--resolution", gen_res, "view resolution (default 256)")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "bundle directory");

    // refine-geometry
    auto* ref = app.add_subcommand("refine-geometry", "optimize vertices against the bundle's normal maps");
    std::string ref_scn, ref_mesh, ref_out;
    ConfigFlags ref_cfg;
    ref->add_option("--scenario", ref_scn)->required()->check(CLI::ExistingDirectory);
    ref->add_option("--mesh", ref_mesh, "input mesh (default: bundle initial mesh)");
    ref->add_option("--out", ref_out, "output mesh (.ply or .obj)");
    ref_cfg.attach(ref);

    // enhance-appearance
    auto* app_cmd = app.add_subcommand("enhance-appearance", "optimize per-view 2D fields and unproject");
    std::string app_scn, app_mesh, app_out;
    ConfigFlags app_cfg;
    app_cmd->add_option("--scenario", app_scn)->required()->check(CLI::ExistingDirectory);
    app_cmd->add_option("--mesh", app_mesh, "geometry to color (default: bundle initial mesh)");
    app_cmd->add_option("--out", app_out, "output directory");
    app_cfg.attach(app_cmd);

    // enhance-fidelity
    auto* fid = app.add_subcommand("enhance-fidelity", "deform a colored mesh toward the input image");
    std::string fid_scn, fid_mesh, fid_out;
    std::optional<double> fid_elev;
    ConfigFlags fid_cfg;
    fid->add_option("--scenario", fid_scn)->required()->check(CLI::ExistingDirectory);
    fid->add_option("--mesh", fid_mesh, "colored mesh M_c")->required()->check(CLI::ExistingFile);
    fid->add_option("--elevation", fid_elev, "use this input elevation instead of estimating it");
    fid->add_option("--out", fid_out, "output directory");
    fid_cfg.attach(fid);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "compare a generated mesh with ground truth");
    std::string ev_mesh, ev_gt, ev_views, ev_out;
    ConfigFlags ev_cfg;
    ev->add_option("--mesh", ev_mesh)->required()->check(CLI::ExistingFile);
    ev->add_option("--gt", ev_gt)->required()->check(CLI::ExistingFile);
    ev->add_option("--views", ev_views, "scenario bundle whose views feed the ghosting metric")
        ->check(CLI::ExistingDirectory);
    ev->add_option("--out", ev_out, "report path (.json for JSON, otherwise key = value text)");
    ev_cfg.attach(ev);

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run every stage on a scenario bundle");
    std::string pipe_scn, pipe_out;
    bool skip_fidelity = false;
    ConfigFlags pipe_cfg;
    pipe->add_option("--scenario", pipe_scn)->required()->check(CLI::ExistingDirectory);
    pipe->add_option("--out", pipe_out, "output directory");
    pipe->add_flag("--skip-fidelity", skip_fidelity, "stop after appearance enhancement (M_c)");
    pipe_cfg.attach(pipe);

    // default-config
    auto* defcfg = app.add_subcommand("default-config", "print the default configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            ScenarioOptions opt = scenario_preset(gen_name);
            if (gen_subdiv)
                opt.subdivisions = *gen_subdiv;
            if (gen_res)
                opt.resolution = *gen_res;
            const Scenario s = make_scenario(gen_name, opt, gen_seed);
            const fs::path out = out_or_default(gen_out, "scenario");
            write_scenario(out, s);
            std::cout << "wrote scenario '" << gen_name << "' to " << out.string() << '\n';
        } else if (*ref) {
            const PipelineConfig c = ref_cfg.resolve();
            const Scenario s = read_scenario(ref_scn);
            const Mesh in = ref_mesh.empty() ? s.initial_mesh : read_mesh(ref_mesh);
            RefineOptions opt;
            opt.weights = c.refine_weights;
            opt.expansion_delta = c.expansion_delta;
            opt.soft = c.soft();
            const RefineResult r =
                refine_geometry(in, s.normal_views, optim(c.iterations_refine, c.step_refine, c.seed), opt);
            const fs::path out = ref_out.empty() ? default_out("refine") / "M_0.ply" : fs::path(ref_out);
            if (out.has_parent_path())
                fs::create_directories(out.parent_path());
            write_mesh(out, r.mesh);
            r.log.write_csv(out.parent_path() / "loss_refine.csv");
            std::cout << "wrote " << out.string() << '\n';
        } else if (*app_cmd) {
            const PipelineConfig c = app_cfg.resolve();
            const Scenario s = read_scenario(app_scn);
            const Mesh in = app_mesh.empty() ? s.initial_mesh : read_mesh(app_mesh);
            AppearanceOptions opt;
            opt.grid_size = c.grid_size;
            opt.unproject.cos_threshold = c.cos_threshold;
            const AppearanceResult r = enhance_appearance(
                in, s.views, c.weights, optim(c.iterations_appearance, c.step_appearance, c.seed, c.epsilon_appearance), opt);
            const fs::path out = out_or_default(app_out, "appearance");
            fs::create_directories(out);
            write_ply(out / "M_c.ply", r.colored);
            for (size_t k = 0; k < r.fields.size(); ++k) {
                write_field(out / ("field_" + std::to_string(k) + ".json"), r.fields[k]);
                write_png(out / ("enhanced_view_" + std::to_string(k) + ".png"), r.deformed[k]);
            }
            r.log.write_csv(out / "loss_appearance.csv");
            std::cout << "wrote " << (out / "M_c.ply").string() << '\n';
        } else if (*fid) {
            const PipelineConfig c = fid_cfg.resolve();
            const Scenario s = read_scenario(fid_scn);
            const Mesh mc = read_mesh(fid_mesh);
            Camera cam;
            if (fid_elev) {
                cam.elevation_deg = *fid_elev;
                cam.distance = c.camera_distance;
                cam.fov_deg = c.camera_fov;
                cam.width = s.input.image.width();
                cam.height = s.input.image.height();
            } else {
                CameraSearchOptions search;
                search.refine = optim(c.iterations_camera, c.step_camera, c.seed);
                search.soft = c.soft();
                cam = estimate_camera(mc, s.input.image, c.camera_distance, c.camera_fov, c.weights, search).camera;
            }
            FidelityOptions opt;
            opt.soft = c.soft();
            opt.input_view_scale = c.input_view_scale;
            opt.unproject.cos_threshold = c.cos_threshold;
            const FidelityResult r = enhance_fidelity(mc, s.input.image, cam, c.weights,
                                                      optim(c.iterations_fidelity, c.step_fidelity, c.seed), opt);
            const fs::path out = out_or_default(fid_out, "fidelity");
            fs::create_directories(out);
            write_ply(out / "M_d.ply", r.deformed);
            write_ply(out / "M_out.ply", r.output);
            r.log.write_csv(out / "loss_fidelity.csv");
            std::cout << "wrote " << (out / "M_out.ply").string() << " (elevation " << cam.elevation_deg << ")\n";
        } else if (*ev) {
            const PipelineConfig c = ev_cfg.resolve();
            const Mesh gen_mesh = read_mesh(ev_mesh);
            const Mesh gt = read_mesh(ev_gt);
            EvalOptions opt;
            opt.resolution = c.resolution;
            opt.views = c.eval_views;
            opt.samples = c.eval_samples;
            opt.fscore_threshold = c.fscore_threshold;
            opt.seed = c.seed;
            EvalReport report = evaluate(gen_mesh, gt, opt);
            if (!ev_views.empty()) {
                const Scenario s = read_scenario(ev_views);
                if (s.views.front().image.width() != c.resolution || s.views.front().image.height() != c.resolution)
                    throw Error("view resolution " + std::to_string(s.views.front().image.width()) +
                                " does not match evaluation resolution " + std::to_string(c.resolution));
                report.ghosting = ghosting_metric(gen_mesh, s.views);
            }
            const fs::path out = ev_out.empty() ? default_out("evaluate") / "report.txt" : fs::path(ev_out);
            if (out.has_parent_path())
                fs::create_directories(out.parent_path());
            std::ofstream f(out);
            if (!f)
                throw Error("cannot write " + out.string());
            f << (out.extension() == ".json" ? report.to_json() : report.to_text());
            std::cout << report.to_text();
        } else if (*pipe) {
            const PipelineConfig c = pipe_cfg.resolve();
            const Scenario s = read_scenario(pipe_scn);
            const fs::path out = pipe_out.empty() ? (c.output_dir.empty() ? default_out("pipeline") : fs::path(c.output_dir))
                                                  : fs::path(pipe_out);
            const PipelineResult r = run_pipeline(s, c, out, skip_fidelity);
            std::cout << r.report.to_text();
        } else if (*defcfg) {
            std::cout << config_to_text(PipelineConfig{});
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
