// graphixs command-line front end: synthesize, degrade, train, render,
// evaluate, and run experiment plans over degradation chains.

#include "graphixs/io.hpp"
#include "graphixs/metrics.hpp"
#include "graphixs/objective.hpp"
#include "graphixs/optimizer.hpp"
#include "graphixs/renderer.hpp"
#include "graphixs/synth.hpp"
#include "graphixs/uncertainty.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphixs;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json doc;
    in >> doc;
    return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    const SceneSpec spec = scene_spec_from_json(read_json_file(spec_path));
    const SynthResult result = synth_scene(spec);
    write_synth_result(result, spec, out_dir);
    std::cout << "wrote " << result.manifest.frames.size() << " frames, "
              << result.set.components.size() << " components to " << out_dir << "\n";
    return 0;
}

int cmd_degrade(const std::string& in_path, const std::string& kind, double fraction,
                double target_fps, double target_sparsity, std::uint64_t seed,
                const std::string& out_path) {
    const DatasetManifest input = load_manifest(in_path);

    DegradationSpec spec;
    spec.fraction = fraction;
    spec.target_fps = target_fps;
    spec.target_sparsity = target_sparsity;
    spec.seed = seed;
    if (kind == "sparse-views") spec.kind = DegradationKind::SparseViews;
    else if (kind == "sparse-frames") spec.kind = DegradationKind::SparseFrames;
    else if (kind == "unsync") spec.kind = DegradationKind::Unsync;
    else if (kind == "faulty") spec.kind = DegradationKind::Faulty;
    else throw std::runtime_error("unknown degradation kind: " + kind);

    DatasetManifest degraded = apply_degradation(input, spec);
    degraded.base_dir = input.base_dir;

    Provenance prov;
    prov["degradation"] = spec.to_string();
    prov["input_manifest"] = fs::absolute(in_path).string();
    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    save_manifest(degraded, out_path, prov);

    std::cout << "degraded manifest: " << degraded.training_frame_count() << "/"
              << input.training_frame_count() << " training frames survive"
              << " (sparsity " << realized_sparsity(degraded, input) << ")\n";
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& config_path,
              const std::string& kernel, bool baseline, bool no_confidence,
              bool no_higher_order, std::int64_t seed_override,
              const std::string& out_path, const std::string& log_path) {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = train_config_from_json(read_json_file(config_path));
    if (!kernel.empty()) cfg.kernel_kind = kernel_kind_from_string(kernel);
    if (baseline) cfg.baseline = true;
    if (no_confidence) cfg.no_confidence = true;
    if (no_higher_order) cfg.no_higher_order = true;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

    const LoadedDataset data = load_dataset(manifest_path);
    const TrainResult result = train(data, cfg);

    Provenance prov;
    prov["train_config"] = train_config_to_json(cfg);
    prov["manifest"] = fs::absolute(manifest_path).string();
    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    save_scene(result.set, out_path, prov);

    const std::string log_target =
        log_path.empty() ? out_path + ".log.ndjson" : log_path;
    write_text_file(log_target, train_log_to_ndjson(result.log));

    if (!result.log.empty())
        std::cout << "final loss " << result.log.back().breakdown.total << " after "
                  << result.log.size() << " iterations\n";
    std::cout << "wrote scene to " << out_path << "\n";
    return 0;
}

int cmd_render(const std::string& scene_path, const std::string& manifest_path,
               int camera_id, double time, const std::string& out_path) {
    const ComponentSet set = load_scene(scene_path);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const CameraModel* cam = manifest.find_camera(camera_id);
    if (!cam) throw std::runtime_error("camera id not in manifest: " +
                                       std::to_string(camera_id));
    RenderConfig cfg;
    const Image img = render_image(set, *cam, time, cfg);
    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    save_ppm(img, out_path);
    std::cout << "rendered camera " << camera_id << " at t=" << time << " to "
              << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& scene_path, const std::string& manifest_path,
             const std::string& out_path) {
    const ComponentSet set = load_scene(scene_path);
    const LoadedDataset data = load_dataset(manifest_path);
    EvalReport report = evaluate(set, data);
    report.config_echo["scene"] = fs::absolute(scene_path).string();
    report.config_echo["manifest"] = fs::absolute(manifest_path).string();

    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_text_file(out_path, report.to_json().dump(2) + "\n");
    write_text_file(out_path + ".tsv", report.to_table());
    std::cout << "holdout mean PSNR " << std::fixed << std::setprecision(3)
              << report.mean_psnr << " dB, DSSIM " << std::setprecision(5)
              << report.mean_dssim << "\n";
    return 0;
}

struct PlanChain {
    std::string label;
    std::vector<DegradationSpec> specs;
};

int cmd_plan(const std::string& plan_path, const std::string& out_dir) {
    const json plan = read_json_file(plan_path);
    const fs::path plan_dir = fs::absolute(plan_path).parent_path();

    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (plan_dir / p).string();
    };

    const std::string base_manifest = resolve(plan.at("base_manifest"));
    TrainConfig base_cfg;
    if (plan.contains("train_config"))
        base_cfg = train_config_from_json(read_json_file(resolve(plan.at("train_config"))));

    std::vector<std::uint64_t> seeds;
    for (const auto& s : plan.at("seeds")) seeds.push_back(s.get<std::uint64_t>());

    std::vector<PlanChain> chains;
    for (const auto& c : plan.at("chains")) {
        PlanChain chain;
        chain.label = c.at("label");
        for (const auto& s : c.at("specs"))
            chain.specs.push_back(degradation_from_string(s.get<std::string>()));
        chains.push_back(chain);
    }
    {
        std::map<std::string, int> label_counts;
        for (const auto& c : chains)
            if (++label_counts[c.label] > 1)
                throw std::runtime_error("duplicate chain label: " + c.label);
    }

    const DatasetManifest base = load_manifest(base_manifest);
    (void)base;

    struct Cell {
        bool ok = false;
        double psnr = 0.0;
        double dssim = 0.0;
        std::string diagnostic;
    };
    std::map<std::string, std::vector<Cell>> results;

    for (const auto& chain : chains) {
        for (std::uint64_t seed : seeds) {
            const fs::path cell_dir =
                fs::path(out_dir) / chain.label / ("seed" + std::to_string(seed));
            fs::create_directories(cell_dir);

            TrainConfig cfg = base_cfg;
            cfg.seed = seed;

            // content key: chain + config + seed + input reference
            std::ostringstream key;
            key << train_config_to_json(cfg).dump() << "|" << base_manifest << "|";
            for (const auto& s : chain.specs) key << s.to_string() << ";";
            const std::uint64_t cell_hash = content_hash(key.str());

            Cell cell;
            const fs::path report_path = cell_dir / "report.json";
            if (fs::exists(report_path)) {
                const json existing = read_json_file(report_path.string());
                if (existing.value("cell_hash", std::uint64_t{0}) == cell_hash) {
                    cell.ok = true;
                    cell.psnr = existing.at("mean_psnr");
                    cell.dssim = existing.at("mean_dssim");
                    results[chain.label].push_back(cell);
                    std::cout << chain.label << " seed " << seed << ": cached\n";
                    continue;
                }
            }

            try {
                DatasetManifest degraded = load_manifest(base_manifest);
                for (const auto& spec : chain.specs)
                    degraded = apply_degradation(degraded, spec);

                const fs::path manifest_path = cell_dir / "manifest.json";
                save_manifest(degraded, manifest_path.string());

                const LoadedDataset data = load_dataset(manifest_path.string());
                const TrainResult run = train(data, cfg);

                Provenance prov;
                prov["train_config"] = train_config_to_json(cfg);
                prov["chain"] = chain.label;
                save_scene(run.set, (cell_dir / "scene.json").string(), prov);
                write_text_file((cell_dir / "train_log.ndjson").string(),
                                train_log_to_ndjson(run.log));

                EvalReport report = evaluate(run.set, data);
                json doc = report.to_json();
                doc["cell_hash"] = cell_hash;
                doc["seed"] = seed;
                doc["label"] = chain.label;
                write_text_file(report_path.string(), doc.dump(2) + "\n");

                cell.ok = true;
                cell.psnr = report.mean_psnr;
                cell.dssim = report.mean_dssim;
                std::cout << chain.label << " seed " << seed << ": PSNR " << cell.psnr
                          << "\n";
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.diagnostic = e.what();
                write_text_file((cell_dir / "error.txt").string(), cell.diagnostic);
                std::cout << chain.label << " seed " << seed << ": FAILED ("
                          << cell.diagnostic << ")\n";
            }
            results[chain.label].push_back(cell);
        }
    }

    // summary table: settings as columns, PSNR/DSSIM as rows, keyed by label
    std::ostringstream table;
    table << "metric";
    for (const auto& [label, cells] : results) table << "\t" << label;
    table << "\npsnr";
    for (const auto& [label, cells] : results) {
        double mean = 0.0;
        int n = 0;
        for (const auto& c : cells)
            if (c.ok) {
                mean += c.psnr;
                ++n;
            }
        table << "\t" << (n > 0 ? std::to_string(mean / n) : "failed");
    }
    table << "\ndssim";
    for (const auto& [label, cells] : results) {
        double mean = 0.0;
        int n = 0;
        for (const auto& c : cells)
            if (c.ok) {
                mean += c.dssim;
                ++n;
            }
        table << "\t" << (n > 0 ? std::to_string(mean / n) : "failed");
    }
    table << "\n";
    write_text_file((fs::path(out_dir) / "summary.tsv").string(), table.str());
    std::cout << table.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graphixs: probabilistic 4D splatting at desk scale"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene and dataset");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "scene spec json")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* degrade = app.add_subcommand("degrade", "apply a data-uncertainty transform");
    std::string deg_in, deg_kind, deg_out;
    double deg_fraction = 0.0, deg_fps = 30.0, deg_sparsity = 0.0;
    std::uint64_t deg_seed = 0;
    degrade->add_option("--in", deg_in, "input manifest")->required();
    degrade->add_option("--kind", deg_kind,
                        "sparse-views|sparse-frames|unsync|faulty")->required();
    degrade->add_option("--fraction", deg_fraction, "fraction of cameras affected");
    degrade->add_option("--target-fps", deg_fps, "target frame rate");
    degrade->add_option("--target-sparsity", deg_sparsity, "target space-time sparsity");
    degrade->add_option("--seed", deg_seed, "random seed");
    degrade->add_option("--out", deg_out, "output manifest")->required();

    auto* train_cmd = app.add_subcommand("train", "fit a component set to a dataset");
    std::string train_manifest, train_config, train_kernel, train_out, train_log;
    bool train_baseline = false, train_no_conf = false, train_no_higher = false;
    std::int64_t train_seed = -1;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train_cmd->add_option("--config", train_config, "train config json");
    train_cmd->add_option("--kernel", train_kernel, "gaussian|student-t");
    train_cmd->add_flag("--baseline", train_baseline,
                        "deterministic mode: no priors, confidence, or noise");
    train_cmd->add_flag("--no-confidence", train_no_conf, "ablate the confidence term");
    train_cmd->add_flag("--no-higher-order", train_no_higher,
                        "freeze acceleration, jerk and snap at zero");
    train_cmd->add_option("--seed", train_seed, "override the config seed");
    train_cmd->add_option("--out", train_out, "output scene json")->required();
    train_cmd->add_option("--log", train_log, "training log path (ndjson)");

    auto* render = app.add_subcommand("render", "render one camera at one time");
    std::string render_scene, render_manifest, render_out;
    int render_camera = 0;
    double render_time = 0.0;
    render->add_option("--scene", render_scene, "scene json")->required();
    render->add_option("--manifest", render_manifest, "manifest defining cameras")
        ->required();
    render->add_option("--camera", render_camera, "camera id")->required();
    render->add_option("--time", render_time, "time in seconds");
    render->add_option("--out", render_out, "output image (ppm)")->required();

    auto* eval_cmd = app.add_subcommand("eval", "score a scene on the holdout view");
    std::string eval_scene, eval_manifest, eval_out;
    eval_cmd->add_option("--scene", eval_scene, "scene json")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--out", eval_out, "report json path")->required();

    auto* plan_cmd = app.add_subcommand("plan", "run a degradation experiment matrix");
    std::string plan_path, plan_out;
    plan_cmd->add_option("--plan", plan_path, "plan json")->required();
    plan_cmd->add_option("--out", plan_out, "results directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(synth_spec, synth_out);
        if (*degrade)
            return cmd_degrade(deg_in, deg_kind, deg_fraction, deg_fps, deg_sparsity,
                               deg_seed, deg_out);
        if (*train_cmd)
            return cmd_train(train_manifest, train_config, train_kernel, train_baseline,
                             train_no_conf, train_no_higher, train_seed, train_out,
                             train_log);
        if (*render)
            return cmd_render(render_scene, render_manifest, render_camera, render_time,
                              render_out);
        if (*eval_cmd) return cmd_eval(eval_scene, eval_manifest, eval_out);
        if (*plan_cmd) return cmd_plan(plan_path, plan_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
