// xsal: saliency maps for object detectors and their insertion/deletion scores.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"
#include "xsal/f32t.hpp"
#include "xsal/pipeline.hpp"

namespace {

using namespace xsal;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct TargetOptions {
    std::vector<float> box;
    int class_id = 0;
};

Detection choose_target(DetectorAdapter& adapter, const Image& image, const TargetOptions& opt) {
    if (opt.box.empty()) {
        check_input(adapter, image);
        return select_top_box(adapter.detect(image));
    }
    const Detection wanted{{opt.box[0], opt.box[1], opt.box[2], opt.box[3]}, opt.class_id, 1.0f};
    return resolve_target(adapter, image, wanted);
}

void add_target_options(CLI::App* cmd, TargetOptions& t) {
    cmd->add_option("--target", t.box, "Target box x1,y1,x2,y2 (default: highest-scoring detection)")
        ->delimiter(',')
        ->expected(4);
    cmd->add_option("--class", t.class_id, "Class id of --target");
}

void add_method_options(CLI::App* cmd, MethodConfigs& m) {
    cmd->add_option("--masks", m.rise.n_masks, "RISE mask count");
    cmd->add_option("--grid", m.rise.grid, "RISE grid cells per side");
    cmd->add_option("--p-on", m.rise.p_on, "RISE cell keep probability");
    cmd->add_option("--seed", m.rise.seed, "RISE sampling seed");
    cmd->add_option("--batch", m.rise.batch, "RISE masks per adapter round");
    cmd->add_option("--sidu-sigma", m.sidu.sigma, "SIDU similarity kernel width");
    cmd->add_flag("!--no-binarize", m.sidu.binarize, "Use continuous SIDU masks");
    cmd->add_option("--bin-threshold", m.sidu.bin_threshold, "SIDU binarisation threshold");
    cmd->add_flag("!--no-relu", m.gradcam.apply_relu, "Grad-CAM without ReLU");
    cmd->add_flag_callback("--relu-after-sum", [&m] { m.gradcam.relu_placement = ReluPlacement::after_sum; },
                           "Apply the Grad-CAM ReLU after summation");
}

void add_metric_options(CLI::App* cmd, MetricConfig& c) {
    cmd->add_option("--steps", c.steps, "Curve steps");
    cmd->add_option("--fill", c.deletion_fill, "Deletion fill value");
    cmd->add_option("--blur-sigma", c.blur_sigma, "Insertion baseline blur sigma");
    cmd->add_option("--blur-radius", c.blur_radius, "Insertion baseline blur radius");
}

nlohmann::json method_config(Method m, const MethodConfigs& cfg) {
    switch (m) {
        case Method::gradcam: return to_json(cfg.gradcam);
        case Method::gradcam_norelu: {
            auto c = cfg.gradcam;
            c.apply_relu = false;
            return to_json(c);
        }
        case Method::rise: return to_json(cfg.rise);
        case Method::sidu: return to_json(cfg.sidu);
    }
    return {};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out << text;
}

// ---- explain ---------------------------------------------------------------

struct ExplainArgs {
    std::string method = "gradcam";
    std::string adapter = "micro:brightness";
    std::string image;
    int size = 512;
    TargetOptions target;
    MethodConfigs cfg;
    std::string out_dir = ".";
    std::string prefix;
    std::string manifest;
    std::string dump_masks;
};

int run_explain(ExplainArgs a) {
    RunManifest m;
    std::optional<Detection> fixed_target;
    if (!a.manifest.empty()) {
        m = RunManifest::read(a.manifest);
        a.method = m.method;
        a.adapter = m.adapter_spec;
        a.image = m.input_path.string();
        a.size = m.input_size;
        const auto method = parse_method(m.method);
        if (method == Method::rise) a.cfg.rise = rise_config_from_json(m.config);
        else if (method == Method::sidu) a.cfg.sidu = sidu_config_from_json(m.config);
        else a.cfg.gradcam = gradcam_config_from_json(m.config);
        fixed_target = m.target;
        if (!m.input_digest.empty() && file_digest(a.image) != m.input_digest)
            throw Error(ErrorCode::io_error, "input file changed since the manifest was written");
    }
    if (a.image.empty()) throw Error(ErrorCode::invalid_parameter, "--image is required");
    const auto method = parse_method(a.method);
    const auto t_load = Clock::now();
    const Image image = load_image(a.image, a.size, a.size);
    auto adapter = make_adapter(a.adapter, a.size, a.size, method == Method::rise ? a.cfg.rise.batch : 1);
    const double load_s = seconds_since(t_load);

    const Detection target = fixed_target ? *fixed_target : choose_target(*adapter, image, a.target);
    const auto t0 = Clock::now();
    const Tensor2D saliency = run_method(method, *adapter, image, target, a.cfg);
    const double explain_s = seconds_since(t0);

    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    const std::string prefix =
        a.prefix.empty() ? std::filesystem::path(a.image).stem().string() + "_" + to_string(method) : a.prefix;
    const auto map_path = dir / (prefix + ".f32t");
    const auto png_path = dir / (prefix + ".png");
    const auto manifest_path = dir / (prefix + ".manifest.json");
    write_f32t(map_path, to_f32t(saliency));
    write_png(png_path, render_overlay(image, saliency, target.box));
    if (!a.dump_masks.empty() && method == Method::rise)
        write_f32t(a.dump_masks, to_f32t(sample_masks(a.cfg.rise, image.width(), image.height())));

    RunManifest out;
    out.method = to_string(method);
    out.config = method_config(method, a.cfg);
    out.seed = a.cfg.rise.seed;
    out.adapter_spec = a.adapter;
    out.adapter_description = adapter->describe();
    out.input_path = std::filesystem::absolute(a.image);
    out.input_digest = file_digest(a.image);
    out.input_size = a.size;
    out.target = target;
    out.outputs = {{"saliency", map_path.string()}, {"overlay", png_path.string()}};
    out.timings = {{"load_s", load_s}, {"explain_s", explain_s}};
    out.write(manifest_path);
    std::cout << "wrote " << map_path.string() << ", " << png_path.string() << ", " << manifest_path.string() << "\n";
    return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
    std::string method;
    std::string map;
    std::string adapter = "micro:brightness";
    std::string image;
    int size = 512;
    TargetOptions target;
    MethodConfigs cfg;
    MetricConfig metric;
    std::string out_dir = ".";
    std::string prefix;
};

nlohmann::json auc_json(double del, double ins) { return {{"deletion_auc", del}, {"insertion_auc", ins}}; }

int run_evaluate(const EvaluateArgs& a) {
    if (a.method.empty() == a.map.empty())
        throw Error(ErrorCode::invalid_parameter, "give exactly one of --method or --map");
    const Image image = load_image(a.image, a.size, a.size);
    auto adapter = make_adapter(a.adapter, a.size, a.size);
    const Detection target = choose_target(*adapter, image, a.target);
    const Tensor2D saliency = a.map.empty() ? run_method(parse_method(a.method), *adapter, image, target, a.cfg)
                                            : tensor_from_f32t(read_f32t(a.map));
    const auto del = deletion_curve(*adapter, image, target, saliency, a.metric);
    const auto ins = insertion_curve(*adapter, image, target, saliency, a.metric);

    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    const std::string prefix = a.prefix.empty() ? std::filesystem::path(a.image).stem().string() : a.prefix;
    write_curve_csv(dir / (prefix + "_deletion.csv"), del);
    write_curve_csv(dir / (prefix + "_insertion.csv"), ins);
    const auto summary = auc_json(auc(del), auc(ins));
    write_text(dir / (prefix + "_auc.json"), summary.dump(2) + "\n");
    std::cout << summary.dump() << "\n";
    return 0;
}

// ---- baseline --------------------------------------------------------------

struct BaselineArgs {
    std::string adapter = "micro:brightness";
    std::string image;
    int size = 512;
    TargetOptions target;
    MetricConfig metric;
    std::uint64_t seed = 0;
    int trials = 20;
    std::string out;
};

int run_baseline(const BaselineArgs& a) {
    const Image image = load_image(a.image, a.size, a.size);
    auto adapter = make_adapter(a.adapter, a.size, a.size);
    const Detection target = choose_target(*adapter, image, a.target);
    const auto r = random_baseline(*adapter, image, target, a.metric, a.seed, a.trials);
    auto j = auc_json(r.deletion, r.insertion);
    j["trials"] = a.trials;
    j["seed"] = a.seed;
    if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
    std::cout << j.dump() << "\n";
    return 0;
}

// ---- batch -----------------------------------------------------------------

struct BatchArgs {
    std::string dir;
    std::string adapter = "micro:brightness";
    std::vector<std::string> methods{"gradcam", "rise", "sidu"};
    int size = 512;
    std::string spectrum = "RGB";
    MethodConfigs cfg;
    MetricConfig metric;
    bool test_split = false;
    std::uint64_t split_seed = 0;
    double test_fraction = 0.2;
    std::string out_dir = ".";
};

int run_batch(const BatchArgs& a) {
    auto entries = scan_directory(a.dir, parse_spectrum(a.spectrum));
    if (entries.empty()) throw Error(ErrorCode::invalid_parameter, "no PNG images in " + a.dir);
    if (a.test_split) entries = split_dataset(std::move(entries), a.split_seed, a.test_fraction).test;

    std::vector<Method> methods;
    for (const auto& s : a.methods) methods.push_back(parse_method(s));
    auto adapter = make_adapter(a.adapter, a.size, a.size);

    // (method, spectrum) -> per-image AUCs, in first-seen order.
    std::vector<std::pair<std::string, std::pair<std::vector<double>, std::vector<double>>>> rows;
    auto row_for = [&](const std::string& key) -> auto& {
        for (auto& r : rows)
            if (r.first == key) return r.second;
        rows.push_back({key, {}});
        return rows.back().second;
    };
    nlohmann::json per_image = nlohmann::json::array();
    for (const auto& entry : entries) {
        const Image image = load_image(entry.image_path, a.size, a.size);
        check_input(*adapter, image);
        const auto dets = adapter->detect(image);
        if (dets.empty()) {
            std::cerr << "skipping " << entry.image_path.string() << ": no detections\n";
            continue;
        }
        const Detection target = select_top_box(dets);
        for (const auto method : methods) {
            const auto saliency = run_method(method, *adapter, image, target, a.cfg);
            const double del = auc(deletion_curve(*adapter, image, target, saliency, a.metric));
            const double ins = auc(insertion_curve(*adapter, image, target, saliency, a.metric));
            auto& row = row_for(display_name(method) + " " + to_string(entry.spectrum));
            row.first.push_back(del);
            row.second.push_back(ins);
            per_image.push_back({{"image", entry.image_path.string()},
                                 {"spectrum", to_string(entry.spectrum)},
                                 {"method", to_string(method)},
                                 {"deletion_auc", del},
                                 {"insertion_auc", ins}});
        }
    }

    std::ostringstream table;
    table << "| | Deletion ↓ | Insertion ↑ |\n|---|---|---|\n";
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& [key, aucs] : rows) {
        table << "| " << key << " | " << format_mean_std(aucs.first) << " | " << format_mean_std(aucs.second)
              << " |\n";
        summary.push_back({{"row", key},
                           {"deletion_mean", mean_of(aucs.first)},
                           {"deletion_std", stddev_of(aucs.first)},
                           {"insertion_mean", mean_of(aucs.second)},
                           {"insertion_std", stddev_of(aucs.second)},
                           {"images", aucs.first.size()}});
    }
    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "table.md", table.str());
    const nlohmann::json results{{"adapter", adapter->describe()},
                                 {"metric", to_json(a.metric)},
                                 {"rise", to_json(a.cfg.rise)},
                                 {"sidu", to_json(a.cfg.sidu)},
                                 {"gradcam", to_json(a.cfg.gradcam)},
                                 {"rows", summary},
                                 {"images", per_image}};
    write_text(dir / "results.json", results.dump(2) + "\n");
    std::cout << table.str();
    return 0;
}

// ---- bridge-check ----------------------------------------------------------

int run_bridge_check(const std::string& cmd_opt, const std::string& tcp) {
    bridge::Connector connect;
    if (!tcp.empty()) {
        const auto pos = tcp.rfind(':');
        if (pos == std::string::npos) throw Error(ErrorCode::invalid_parameter, "expected --tcp HOST:PORT");
        const std::string host = tcp.substr(0, pos);
        const int port = std::stoi(tcp.substr(pos + 1));
        connect = [host, port] { return bridge::connect_tcp(host, port); };
    } else {
        std::string cmd = cmd_opt;
        if (cmd.empty()) {
            const char* env = std::getenv("XSAL_BRIDGE_CMD");
            if (!env || !*env) throw Error(ErrorCode::invalid_parameter, "give --cmd or set XSAL_BRIDGE_CMD");
            cmd = env;
        }
        connect = [cmd] { return bridge::ChildProcessTransport::spawn(cmd); };
    }
    const auto results = bridge::check_conformance(connect);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xsal: saliency maps and causal metrics for object detectors"};
    app.require_subcommand(1);

    ExplainArgs ex;
    auto* explain = app.add_subcommand("explain", "Compute a saliency map for one detection");
    explain->add_option("--method", ex.method, "gradcam | gradcam-norelu | rise | sidu");
    explain->add_option("--adapter", ex.adapter, "Adapter spec");
    explain->add_option("--image", ex.image, "Input PNG");
    explain->add_option("--size", ex.size, "Square input size after resizing");
    explain->add_option("--out-dir", ex.out_dir);
    explain->add_option("--prefix", ex.prefix, "Output file prefix");
    explain->add_option("--manifest", ex.manifest, "Replay a run manifest");
    explain->add_option("--dump-masks", ex.dump_masks, "Write the RISE mask stack to this .f32t file");
    add_target_options(explain, ex.target);
    add_method_options(explain, ex.cfg);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Deletion and insertion curves for a saliency map");
    evaluate->add_option("--method", ev.method, "Compute the map with this method");
    evaluate->add_option("--map", ev.map, "Or read it from an .f32t file");
    evaluate->add_option("--adapter", ev.adapter, "Adapter spec");
    evaluate->add_option("--image", ev.image, "Input PNG")->required();
    evaluate->add_option("--size", ev.size);
    evaluate->add_option("--out-dir", ev.out_dir);
    evaluate->add_option("--prefix", ev.prefix);
    add_target_options(evaluate, ev.target);
    add_method_options(evaluate, ev.cfg);
    add_metric_options(evaluate, ev.metric);

    BaselineArgs bl;
    auto* baseline = app.add_subcommand("baseline", "Random-ordering deletion and insertion AUCs");
    baseline->add_option("--adapter", bl.adapter);
    baseline->add_option("--image", bl.image)->required();
    baseline->add_option("--size", bl.size);
    baseline->add_option("--seed", bl.seed);
    baseline->add_option("--trials", bl.trials);
    baseline->add_option("--out", bl.out, "Also write the JSON here");
    add_target_options(baseline, bl.target);
    add_metric_options(baseline, bl.metric);

    BatchArgs ba;
    auto* batch = app.add_subcommand("batch", "Sweep a directory and tabulate mean±std AUCs");
    batch->add_option("--dir", ba.dir)->required();
    batch->add_option("--adapter", ba.adapter);
    batch->add_option("--methods", ba.methods)->delimiter(',');
    batch->add_option("--size", ba.size);
    batch->add_option("--spectrum", ba.spectrum, "Spectrum for images without a sidecar");
    batch->add_flag("--test-split", ba.test_split, "Only evaluate the seeded test split");
    batch->add_option("--split-seed", ba.split_seed);
    batch->add_option("--test-fraction", ba.test_fraction);
    batch->add_option("--out-dir", ba.out_dir);
    add_method_options(batch, ba.cfg);
    add_metric_options(batch, ba.metric);

    std::string check_cmd;
    std::string check_tcp;
    auto* check = app.add_subcommand("bridge-check", "Run the protocol conformance suite against a server");
    check->add_option("--cmd", check_cmd, "Server command (default: $XSAL_BRIDGE_CMD)");
    check->add_option("--tcp", check_tcp, "Connect to HOST:PORT instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*explain) return run_explain(ex);
        if (*evaluate) return run_evaluate(ev);
        if (*baseline) return run_baseline(bl);
        if (*batch) return run_batch(ba);
        if (*check) return run_bridge_check(check_cmd, check_tcp);
    } catch (const Error& e) {
        std::cerr << "xsal: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "xsal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
