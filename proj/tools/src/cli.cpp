#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "grnr/error.hpp"
#include "grnr/eval.hpp"
#include "grnr/pipeline.hpp"
#include "grnr/synthetic.hpp"

namespace fs = std::filesystem;

namespace grnr::cli {

namespace {

struct PipelineFlags {
    int m = 1;
    int k = 40;
    double eta = 5.0;
    double sigma = 4.0;
    double jitter = 1e-4;
    int resize = 320;
    int crop = 256;
    std::vector<int> levels{2, 3};
    int threads = 1;

    [[nodiscard]] PipelineConfig config() const {
        PipelineConfig c;
        c.regression.m = m;
        c.regression.k = k;
        c.regression.eta = eta;
        c.regression.jitter = jitter;
        c.sigma = sigma;
        c.preprocess.resize = resize;
        c.preprocess.crop = crop;
        c.levels = levels;
        c.threads = threads;
        c.validate();
        return c;
    }
};

struct BackboneFlags {
    std::string model;
    std::vector<std::string> output_names;
    std::optional<std::uint64_t> stand_in;
};

void add_pipeline_flags(CLI::App* app, PipelineFlags& f) {
    app->add_option("--m", f.m, "Neighborhood radius")->capture_default_str();
    app->add_option("--k", f.k, "Global support size K")->capture_default_str();
    app->add_option("--eta", f.eta, "Global-normality weight")->capture_default_str();
    app->add_option("--sigma", f.sigma, "Gaussian smoothing sigma (pixels)")->capture_default_str();
    app->add_option("--jitter", f.jitter, "Relative ridge on the local Gram")->capture_default_str();
    app->add_option("--resize", f.resize, "Square resize before cropping")->capture_default_str();
    app->add_option("--crop", f.crop, "Center crop size")->capture_default_str();
    app->add_option("--levels", f.levels, "Hierarchy ids")->delimiter(',')->capture_default_str();
    app->add_option("--threads", f.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

void add_backbone_flags(CLI::App* app, BackboneFlags& f) {
    app->add_option("--model", f.model, "ONNX backbone (defaults to $GRNR_MODEL)");
    app->add_option("--output-names", f.output_names, "Model output per level (default layer<id>)")
        ->delimiter(',');
    app->add_option("--stand-in", f.stand_in, "Use the seeded random-conv feature stand-in");
}

// Resolves the backbone; returns nullptr when none was requested.
std::shared_ptr<feature::Backbone> make_backbone(const BackboneFlags& f) {
    std::string model = f.model;
    if (f.stand_in) {
        if (!model.empty()) fail(ErrorKind::Argument, "--model and --stand-in are exclusive");
        return std::make_shared<synthetic::RandomConvBackbone>(*f.stand_in);
    }
    if (model.empty()) {
        if (const char* env = std::getenv("GRNR_MODEL"); env != nullptr) model = env;
    }
    if (model.empty()) return nullptr;
    return std::make_shared<feature::OnnxBackbone>(feature::BackboneHandle{model, f.output_names});
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Argument:
        case ErrorKind::Config:
            return kExitUsage;
        case ErrorKind::Io:
        case ErrorKind::Input:
        case ErrorKind::Format:
            return kExitIo;
        case ErrorKind::Backend:
            return kExitBackend;
        case ErrorKind::Dataset:
            return kExitDataset;
        default:
            return kExitFailure;
    }
}

double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double x = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(x);
    const std::size_t j = std::min(i + 1, v.size() - 1);
    return v[i] + (v[j] - v[i]) * (x - static_cast<double>(i));
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    PipelineFlags pipe;
    BackboneFlags backbone;
    std::string input;
    std::string features;
    std::string out;
    std::string raw;
};

int cmd_detect(const DetectArgs& a, const CLI::App& app, std::ostream& out, std::ostream& err) {
    const auto config = a.pipe.config();
    Detection det;
    if (!a.features.empty()) {
        if (!a.backbone.model.empty() || a.backbone.stand_in) {
            fail(ErrorKind::Argument, "--features cannot be combined with --model or --stand-in");
        }
        const auto stack = select_levels(feature::load_feature_stack(a.features), config.levels);
        det = detect_from_features(stack, config, config.preprocess.crop, config.preprocess.crop);
    } else {
        auto backbone = make_backbone(a.backbone);
        if (!backbone) {
            err << "detect needs --model, --stand-in or --features (or GRNR_MODEL)\n" << app.help();
            return kExitUsage;
        }
        if (a.input.empty()) fail(ErrorKind::Argument, "--input is required with a backbone");
        BackboneSource source(std::move(backbone));
        det = detect_file(a.input, source, config);
    }
    if (!a.out.empty()) postproc::render_heatmap(det.map, a.out);
    if (!a.raw.empty()) postproc::save_anomaly_map(det.map, a.raw);
    out << std::setprecision(10) << det.map.image_score << "\n";
    return kExitOk;
}

struct ExtractArgs {
    PipelineFlags pipe;
    BackboneFlags backbone;
    std::string input;
    std::string out;
};

int cmd_extract(const ExtractArgs& a, const CLI::App& app, std::ostream& out, std::ostream& err) {
    const auto config = a.pipe.config();
    auto backbone = make_backbone(a.backbone);
    if (!backbone) {
        err << "extract needs --model or --stand-in (or GRNR_MODEL)\n" << app.help();
        return kExitUsage;
    }
    const auto image = feature::preprocess_image(feature::decode_image(a.input), config.preprocess);
    const auto stack = feature::extract_features(image, *backbone, config.levels);
    feature::save_feature_stack(stack, a.out);
    for (const auto& m : stack.maps) {
        out << "level " << m.level << ": " << m.channels << "x" << m.height << "x" << m.width << "\n";
    }
    return kExitOk;
}

struct EvalArgs {
    PipelineFlags pipe;
    BackboneFlags backbone;
    std::string root;
    std::vector<std::string> categories;
    std::string features;
    std::string report;
};

int cmd_eval(const EvalArgs& a, const CLI::App& app, std::ostream& out, std::ostream& err) {
    const auto config = a.pipe.config();
    const auto format = a.report.empty() ? eval::ReportFormat::Json : eval::report_format_for(a.report);

    std::unique_ptr<FeatureSource> source;
    if (!a.features.empty()) {
        if (!a.backbone.model.empty() || a.backbone.stand_in) {
            fail(ErrorKind::Argument, "--features cannot be combined with --model or --stand-in");
        }
        source = std::make_unique<DumpSource>(a.root, a.features);
    } else if (auto backbone = make_backbone(a.backbone)) {
        source = std::make_unique<BackboneSource>(std::move(backbone));
    } else {
        err << "eval needs --model, --stand-in or --features (or GRNR_MODEL)\n" << app.help();
        return kExitUsage;
    }

    const auto available = eval::list_categories(a.root);
    std::vector<std::string> selected = a.categories.empty() ? available : a.categories;
    for (const auto& c : selected) {
        if (std::find(available.begin(), available.end(), c) == available.end()) {
            std::string list;
            for (const auto& name : available) list += (list.empty() ? "" : ", ") + name;
            fail(ErrorKind::Dataset, "unknown category '" + c + "'; available: " +
                                         (list.empty() ? "(none)" : list));
        }
    }
    if (selected.empty()) fail(ErrorKind::Dataset, "no categories under " + a.root);

    std::vector<eval::MetricsReport> reports;
    for (const auto& c : selected) {
        const auto index = eval::load_mvtec_layout(a.root, c);
        reports.push_back(eval::evaluate_category(index, *source, config));
    }
    if (reports.size() > 1) reports.push_back(eval::mean_report(reports));

    out << std::left << std::setw(16) << "category" << " pixel_auroc image_auroc pixel_f1 ms/image\n";
    for (const auto& r : reports) {
        out << std::left << std::setw(16) << r.category << " " << std::setw(11) << fixed(r.pixel_auroc, 4)
            << " " << std::setw(11) << fixed(r.image_auroc, 4) << " " << std::setw(8)
            << fixed(r.pixel_f1, 4) << " " << fixed(r.per_image_ms, 1) << "\n";
    }
    if (!a.report.empty()) eval::write_reports(reports, a.report, format);
    return kExitOk;
}

struct BenchArgs {
    PipelineFlags pipe;
    BackboneFlags backbone;
    std::string input;
    std::string features;
    int iters = 20;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    if (a.iters < 1) fail(ErrorKind::Argument, "--iters must be >= 1");
    const auto config = a.pipe.config();
    const int size = config.preprocess.crop;

    std::function<FeatureStack()> produce;
    std::shared_ptr<feature::Backbone> backbone;
    std::optional<ImageTensor> image;
    if (!a.features.empty()) {
        produce = [&] { return select_levels(feature::load_feature_stack(a.features), config.levels); };
    } else if ((backbone = make_backbone(a.backbone))) {
        if (a.input.empty()) fail(ErrorKind::Argument, "--input is required with a backbone");
        image = feature::preprocess_image(feature::decode_image(a.input), config.preprocess);
        produce = [&] { return feature::extract_features(*image, *backbone, config.levels); };
    } else {
        // Default workload: one 32x32x512 and one 16x16x1024 map.
        const synthetic::MapShape shapes[] = {{2, 512, 32, 32}, {3, 1024, 16, 16}};
        const auto stack = synthetic::random_stack(a.seed, shapes);
        produce = [stack] { return stack; };
    }

    std::vector<double> extract;
    std::vector<double> global;
    std::vector<double> regression;
    std::vector<double> post;
    for (int i = 0; i < a.iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto stack = produce();
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const auto det = detect_from_features(stack, config, size, size);
        extract.push_back(ms);
        global.push_back(det.timings.sample_global_ms);
        regression.push_back(det.timings.regression_ms);
        post.push_back(det.timings.postproc_ms);
    }
    out << "stage          median_ms   p95_ms\n";
    const std::pair<const char*, const std::vector<double>*> rows[] = {
        {"extract", &extract}, {"sample_global", &global}, {"regression", &regression}, {"postproc", &post}};
    for (const auto& [name, v] : rows) {
        out << std::left << std::setw(14) << name << " " << std::setw(11) << fixed(percentile(*v, 0.5), 3)
            << " " << fixed(percentile(*v, 0.95), 3) << "\n";
    }
    return kExitOk;
}

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 0;
    int count = 20;
    int size = 256;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const auto categories = synthetic::write_suite(a.out, a.seed, a.count, a.size);
    out << "wrote " << categories.size() << " categories to " << a.out << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-shot texture anomaly detection by regression over local and global supports", "grnr"};
    app.require_subcommand(1);

    DetectArgs detect;
    auto* detect_cmd = app.add_subcommand("detect", "Score one image and write its heatmap");
    add_pipeline_flags(detect_cmd, detect.pipe);
    add_backbone_flags(detect_cmd, detect.backbone);
    detect_cmd->add_option("--input", detect.input, "Input image");
    detect_cmd->add_option("--features", detect.features, "Precomputed .fmap instead of a backbone");
    detect_cmd->add_option("--out", detect.out, "Heatmap PNG");
    detect_cmd->add_option("--raw", detect.raw, "Raw anomaly map (.fmap)");

    ExtractArgs extract;
    auto* extract_cmd = app.add_subcommand("extract", "Dump backbone features to a .fmap file");
    add_pipeline_flags(extract_cmd, extract.pipe);
    add_backbone_flags(extract_cmd, extract.backbone);
    extract_cmd->add_option("--input", extract.input, "Input image")->required();
    extract_cmd->add_option("--out", extract.out, "Output .fmap")->required();

    EvalArgs evaluate;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate on an MVTec-style directory tree");
    add_pipeline_flags(eval_cmd, evaluate.pipe);
    add_backbone_flags(eval_cmd, evaluate.backbone);
    eval_cmd->add_option("--root", evaluate.root, "Dataset root")->required();
    eval_cmd->add_option("--category", evaluate.categories, "Restrict to these categories");
    eval_cmd->add_option("--features", evaluate.features, "Root of precomputed .fmap dumps");
    eval_cmd->add_option("--report", evaluate.report, "Report path (.json or .csv)");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Time the pipeline stages");
    add_pipeline_flags(bench_cmd, bench.pipe);
    add_backbone_flags(bench_cmd, bench.backbone);
    bench_cmd->add_option("--input", bench.input, "Image to run through the backbone");
    bench_cmd->add_option("--features", bench.features, "Precomputed .fmap");
    bench_cmd->add_option("--iters", bench.iters, "Repetitions")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Seed of the default random workload")->capture_default_str();

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write the seeded synthetic texture suite");
    synth_cmd->add_option("--out", synth.out, "Output root")->required();
    synth_cmd->add_option("--seed", synth.seed, "Suite seed")->capture_default_str();
    synth_cmd->add_option("--count", synth.count, "Number of textures")->capture_default_str();
    synth_cmd->add_option("--size", synth.size, "Texture size in pixels")->capture_default_str();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*detect_cmd) return cmd_detect(detect, *detect_cmd, out, err);
        if (*extract_cmd) return cmd_extract(extract, *extract_cmd, out, err);
        if (*eval_cmd) return cmd_eval(evaluate, *eval_cmd, out, err);
        if (*bench_cmd) return cmd_bench(bench, out);
        if (*synth_cmd) return cmd_synth(synth, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace grnr::cli
