#include "inrshape/dataset.hpp"
#include "inrshape/errors.hpp"
#include "inrshape/generation.hpp"
#include "inrshape/mesh_io.hpp"
#include "inrshape/metrics.hpp"
#include "inrshape/model.hpp"
#include "inrshape/random.hpp"
#include "inrshape/runtime.hpp"
#include "inrshape/service.hpp"
#include "inrshape/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace inrshape;

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

void print_error(std::string_view code, const std::string& message) {
    std::cerr << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

void print_result(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

void write_json(const fs::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Io, path.string() + ": " + e.what());
    }
}

std::string indexed(std::string_view prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return std::string(prefix) + buf;
}

std::vector<Feature> parse_feature_list(const std::vector<std::string>& names) {
    std::vector<Feature> out;
    for (const auto& n : names) {
        const auto f = parse_feature(n);
        if (!f) fail(ErrorCode::Config, "unknown feature '" + n + "'");
        out.push_back(*f);
    }
    return out;
}

Precision parse_precision(const std::string& s) {
    if (s == "float32") return Precision::Float32;
    if (s == "float64") return Precision::Float64;
    fail(ErrorCode::Config, "precision must be float32 or float64");
}

struct FeatureFlags {
    std::optional<double> volume, isthmus, symmetry;

    void add(CLI::App* app, const std::string& what) {
        app->add_option("--volume", volume, what + " volume (unit cube units^3)");
        app->add_option("--isthmus", isthmus, what + " isthmus area (unit cube units^2)");
        app->add_option("--symmetry", symmetry, what + " mirror IoU");
    }
    FeatureOverrides overrides() const { return {volume, isthmus, symmetry}; }
};

// dataset-gen

struct DatasetGenArgs {
    fs::path out;
    std::size_t n = 20;
    std::uint64_t seed = 0;
    std::size_t mesh_resolution = 96;
    SampleOptions sampling;
    std::optional<double> split_fraction;
    fs::path ranges;
    fs::path import_dir;
    std::vector<double> reference{0.0, 0.0, 0.0};
    std::optional<double> mm_per_unit;
};

void run_dataset_gen(const DatasetGenArgs& a) {
    Dataset ds;
    if (!a.import_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(a.import_dir)) {
            const auto ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".obj" || ext == ".stl" || ext == ".OBJ" || ext == ".STL"))
                files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) fail(ErrorCode::Config, "--import-dir holds no .obj or .stl files");
        ds = import_meshes(files, Vec3(a.reference[0], a.reference[1], a.reference[2]), a.sampling, a.seed);
    } else {
        PopulationOptions opts;
        opts.n = a.n;
        opts.seed = a.seed;
        opts.mesh_resolution = a.mesh_resolution;
        opts.sampling = a.sampling;
        if (!a.ranges.empty()) opts.ranges = ParamRanges::from_json(read_json(a.ranges));
        if (a.split_fraction) opts.ranges.split_fraction = *a.split_fraction;
        ds = generate_population(opts);
    }
    if (a.mm_per_unit) ds.mm_per_unit = a.mm_per_unit;
    save_dataset(ds, a.out);
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& s : ds.shapes) shapes.push_back({{"id", s.id}, {"name", s.name}, {"features", s.features.to_json()}});
    print_result({{"dataset", a.out.string()}, {"shapes", shapes}});
}

// train

struct TrainArgs {
    fs::path dataset;
    fs::path out;
    std::size_t epochs = 10000;
    std::size_t points = 1000;
    double learning_rate = 3e-4;
    double lambda = 1e-4;
    double corr_weight = 1.0;
    std::vector<std::string> fixed;
    std::size_t latent_dim = 64;
    std::size_t hidden_width = 256;
    std::size_t hidden_layers = 3;
    double init_sigma = 0.01;
    std::uint64_t seed = 0;
    std::string precision = "float32";
    fs::path log;
    std::size_t checkpoint_every = 0;
    std::size_t progress = 100;
};

void run_train(const TrainArgs& a) {
    const Dataset ds = load_dataset(a.dataset);
    ModelConfig mc;
    mc.fixed_features = parse_feature_list(a.fixed);
    mc.latent_dim = a.latent_dim;
    mc.hidden_width = a.hidden_width;
    mc.hidden_layers = a.hidden_layers;
    mc.init_sigma = a.init_sigma;
    mc.seed = a.seed;
    std::vector<std::string> names;
    for (const auto& s : ds.shapes) names.push_back(s.name);
    ShapeModel model = create_model(mc, ds.features(), names);

    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.points_per_shape = a.points;
    tc.learning_rate = a.learning_rate;
    tc.lambda = a.lambda;
    tc.corr_weight = a.corr_weight;
    tc.corr_enabled = a.corr_weight > 0.0 && !mc.fixed_features.empty();
    tc.seed = derive_seed(a.seed, 100);
    tc.precision = parse_precision(a.precision);
    tc.log_path = a.log;
    tc.checkpoint_every = a.checkpoint_every;
    if (a.checkpoint_every > 0) tc.checkpoint_path = a.out;
    tc.diagnostic_path = fs::path(a.out).concat(".diagnostic");
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());

    const auto samples = ds.sample_sets();
    const auto reports = train(model, samples, tc, [&](const EpochReport& r) {
        if (a.progress > 0 && (r.epoch % a.progress == 0 || r.epoch == tc.epochs))
            std::cerr << r.to_json().dump() << '\n';
    });
    model.training["dataset"] = {{"seed", ds.seed}, {"shapes", ds.shapes.size()}};
    save_checkpoint(model, a.out);
    nlohmann::json final_report = reports.back().to_json();
    final_report.erase("seconds");
    print_result({{"checkpoint", a.out.string()},
                  {"epochs", reports.size()},
                  {"final", final_report},
                  {"mean_abs_latent_correlation", mean_abs_latent_correlation(model.latents)}});
}

// reconstruct

struct ReconstructArgs {
    fs::path ckpt;
    fs::path dataset;
    std::vector<std::uint32_t> shapes;
    fs::path out;
    std::size_t resolution = 64;
    std::size_t chamfer_samples = 30000;
};

void run_reconstruct(const ReconstructArgs& a) {
    const ShapeModel model = load_checkpoint(a.ckpt);
    std::vector<std::uint32_t> ids = a.shapes;
    if (ids.empty())
        for (std::uint32_t i = 0; i < model.latents.size(); ++i) ids.push_back(i);
    SynthesisOptions so;
    so.resolution = a.resolution;
    fs::create_directories(a.out);
    std::vector<std::optional<TriMesh>> meshes;
    nlohmann::json written = nlohmann::json::array();
    for (auto id : ids) {
        if (id >= model.latents.size()) fail(ErrorCode::NotFound, "unknown shape id " + std::to_string(id));
        Synthesis s = synthesize(model, model.latents[id], so);
        const std::string name = id < model.shape_names.size() ? model.shape_names[id] : indexed("shape_", id);
        if (!s.empty) write_obj(a.out / (name + ".obj"), s.mesh);
        written.push_back({{"id", id}, {"name", name}, {"empty", s.empty}});
        meshes.push_back(s.empty ? std::nullopt : std::optional<TriMesh>(std::move(s.mesh)));
    }
    nlohmann::json result = {{"schema_version", kReportSchemaVersion}, {"resolution", a.resolution}, {"shapes", written}};
    if (!a.dataset.empty()) {
        const Dataset ds = load_dataset(a.dataset);
        std::vector<TriMesh> refs;
        for (auto id : ids) refs.push_back(ds.shape(id).mesh);
        ChamferOptions co;
        co.samples = a.chamfer_samples;
        result["reconstruction"] = reconstruction_report(ids, refs, meshes, co, ds.mm_per_unit).to_json();
    }
    write_json(a.out / "reconstruction.json", result);
    print_result(result);
}

// generate

struct GenerateArgs {
    fs::path ckpt;
    fs::path out;
    std::size_t n = 10;
    std::uint64_t seed = 0;
    std::size_t resolution = 64;
    FeatureFlags overrides;
    bool no_measure = false;
};

void run_generate(const GenerateArgs& a) {
    const ShapeModel model = load_checkpoint(a.ckpt);
    const LatentSampler sampler = fit_sampler(model);
    CohortOptions co;
    co.synthesis.resolution = a.resolution;
    co.measure = !a.no_measure;
    const auto cohort = generate_cohort(model, sampler, a.n, a.seed, a.overrides.overrides(), co);
    fs::create_directories(a.out);
    nlohmann::json members = nlohmann::json::array();
    std::size_t empty = 0;
    for (const auto& m : cohort) {
        const std::string name = indexed("member_", m.index);
        nlohmann::json j = {{"index", m.index},
                            {"code", m.code.to_json()},
                            {"pool_index", m.pool_index},
                            {"extrapolated", m.extrapolated},
                            {"empty", m.synthesis.empty}};
        if (m.conditioned) j["conditioned"] = m.conditioned->to_json();
        if (m.measured) j["measured"] = m.measured->to_json();
        if (m.synthesis.empty) {
            ++empty;
        } else {
            write_obj(a.out / (name + ".obj"), m.synthesis.mesh);
            j["mesh"] = name + ".obj";
        }
        members.push_back(j);
    }
    const nlohmann::json manifest = {{"schema_version", kReportSchemaVersion},
                                     {"seed", a.seed},
                                     {"n", a.n},
                                     {"resolution", a.resolution},
                                     {"sampler", sampler.to_json()},
                                     {"members", members}};
    write_json(a.out / "manifest.json", manifest);
    print_result({{"out", a.out.string()}, {"generated", a.n}, {"empty", empty}});
}

// edit

struct EditArgs {
    fs::path ckpt;
    std::optional<std::uint32_t> shape;
    fs::path code;
    fs::path out;
    FeatureFlags targets;
    std::string sweep;
    double from = 0.0;
    double to = 0.0;
    std::size_t steps = 5;
    std::size_t resolution = 64;
    double clamp = 3.0;
};

void run_edit(const EditArgs& a) {
    const ShapeModel model = load_checkpoint(a.ckpt);
    if (a.shape.has_value() == !a.code.empty()) fail(ErrorCode::Config, "give exactly one of --shape and --code");
    LatentCode base;
    if (a.shape) {
        if (*a.shape >= model.latents.size()) fail(ErrorCode::NotFound, "unknown shape id " + std::to_string(*a.shape));
        base = model.latents[*a.shape];
    } else {
        base = LatentCode::from_json(read_json(a.code));
    }
    std::vector<FeatureDeltas> steps;
    if (!a.sweep.empty()) {
        const auto f = parse_feature(a.sweep);
        if (!f) fail(ErrorCode::Config, "unknown sweep feature '" + a.sweep + "'");
        steps = sweep_deltas(model, base, *f, a.from, a.to, a.steps);
    } else {
        if (!model.conditioned()) fail(ErrorCode::UnsupportedModel, "editing needs a model with fixed features");
        const FeatureVector current = decode_fixed(model, base);
        const FeatureOverrides t = a.targets.overrides();
        FeatureDeltas d{};
        for (Feature f : kAllFeatures)
            if (const auto v = t.get(f)) d[std::size_t(int(f))] = *v - current.get(f);
        steps.push_back(d);
    }
    EditOptions eo;
    eo.synthesis.resolution = a.resolution;
    eo.clamp_sigma = a.clamp;
    const auto edits = edit_shape(model, base, steps, eo);
    fs::create_directories(a.out);
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < edits.size(); ++i) {
        const auto& e = edits[i];
        const std::string name = indexed("step_", i);
        nlohmann::json j = {{"step", i},
                            {"deltas", e.deltas},
                            {"code", e.code.to_json()},
                            {"conditioned", e.conditioned.to_json()},
                            {"clamped", e.clamped},
                            {"empty", e.synthesis.empty},
                            {"components", e.synthesis.empty ? 0 : connected_components(e.synthesis.mesh)}};
        if (e.measured) j["measured"] = e.measured->to_json();
        if (!e.synthesis.empty) {
            write_obj(a.out / (name + ".obj"), e.synthesis.mesh);
            j["mesh"] = name + ".obj";
        }
        list.push_back(j);
    }
    const nlohmann::json result = {{"schema_version", kReportSchemaVersion}, {"base", base.to_json()}, {"steps", list}};
    write_json(a.out / "edit.json", result);
    print_result(result);
}

// evaluate

struct EvaluateArgs {
    fs::path ckpt;
    fs::path dataset;
    fs::path mesh;
    fs::path out;
    fs::path plots;
    std::size_t cohort = 1000;
    std::uint64_t seed = 0;
    std::size_t resolution = 64;
    std::size_t chamfer_samples = 30000;
    bool skip_reconstruction = false;
    double max_empty_rate = 0.05;
};

void run_evaluate(const EvaluateArgs& a) {
    if (!a.mesh.empty()) {
        const TriMesh mesh = read_mesh(a.mesh);
        nlohmann::json j = {{"schema_version", kReportSchemaVersion},
                            {"mesh", a.mesh.string()},
                            {"vertices", mesh.vertices.size()},
                            {"faces", mesh.faces.size()},
                            {"watertight", is_watertight(mesh)},
                            {"components", connected_components(mesh)}};
        if (is_watertight(mesh)) j["features"] = measure_features(mesh).to_json();
        if (!a.out.empty()) write_json(a.out, j);
        print_result(j);
        return;
    }
    if (a.ckpt.empty() || a.dataset.empty()) fail(ErrorCode::Config, "evaluate needs --ckpt and --dataset, or --mesh");
    const ShapeModel model = load_checkpoint(a.ckpt);
    const Dataset ds = load_dataset(a.dataset);
    nlohmann::json report = {{"schema_version", kReportSchemaVersion},
                             {"checkpoint", a.ckpt.string()},
                             {"fixed_features", nlohmann::json::array()},
                             {"cohort", a.cohort},
                             {"seed", a.seed},
                             {"resolution", a.resolution}};
    for (Feature f : model.config.fixed_features) report["fixed_features"].push_back(feature_name(f));
    if (!a.skip_reconstruction) {
        ReconstructionOptions ro;
        ro.synthesis.resolution = a.resolution;
        ro.chamfer.samples = a.chamfer_samples;
        report["reconstruction"] = evaluate_reconstruction(model, ds, ro).to_json();
    }
    const LatentSampler sampler = fit_sampler(model);
    CohortOptions co;
    co.synthesis.resolution = a.resolution;
    const auto cohort = generate_cohort(model, sampler, a.cohort, a.seed, {}, co);
    std::vector<FeatureVector> generated;
    std::vector<FeatureVector> conditioned;
    std::vector<std::optional<FeatureVector>> measured;
    for (const auto& m : cohort) {
        if (m.measured) generated.push_back(*m.measured);
        conditioned.push_back(m.conditioned.value_or(FeatureVector{}));
        measured.push_back(m.measured);
    }
    const double empty_rate = double(cohort.size() - generated.size()) / double(std::max<std::size_t>(1, cohort.size()));
    report["empty_rate"] = empty_rate;
    std::optional<DistributionComparison> dist;
    if (generated.size() >= 2) {
        dist = compare_distributions(ds.features(), generated);
        report["distributions"] = dist->to_json();
    }
    std::optional<SteerabilityReport> steer;
    if (model.conditioned()) {
        steer = steerability_from_pairs(model.config.fixed_features, conditioned, measured);
        report["steerability"] = steer->to_json();
    }
    report["mean_abs_latent_correlation"] = mean_abs_latent_correlation(model.latents);
    if (!a.plots.empty()) write_plots(a.plots, dist ? &*dist : nullptr, steer ? &*steer : nullptr);
    if (!a.out.empty()) write_json(a.out, report);
    print_result(report);
    if (empty_rate > a.max_empty_rate)
        fail(ErrorCode::Numerical, "empty-mesh rate " + std::to_string(empty_rate) + " exceeds " +
                                       std::to_string(a.max_empty_rate));
}

// serve

struct ServeArgs {
    fs::path ckpt;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t resolution = 48;
    std::size_t max_payload = 16u << 20;
    double clamp = 3.0;
};

HttpServer* g_server = nullptr;

void run_serve(const ServeArgs& a) {
    ServiceOptions so;
    so.default_resolution = a.resolution;
    so.max_payload_bytes = a.max_payload;
    so.clamp_sigma = a.clamp;
    Service service(so);
    HttpServer server(service);
    const int port = server.bind(a.host, a.port);
    service.load_async(a.ckpt);
    std::cerr << nlohmann::json{{"listening", a.host + ":" + std::to_string(port)}, {"checkpoint", a.ckpt.string()}}
                     .dump()
              << '\n';
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    server.listen();
    g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
    configure_allocator();
    CLI::App app{"Steerable implicit shape models: dataset generation, training, synthesis and editing"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; command-line flags take precedence");

    DatasetGenArgs dg;
    auto* dataset_gen = app.add_subcommand("dataset-gen", "Generate a synthetic two-lobe population or import meshes");
    dataset_gen->add_option("--out", dg.out, "Output directory")->required();
    dataset_gen->add_option("--n", dg.n, "Number of synthetic shapes")->capture_default_str();
    dataset_gen->add_option("--seed", dg.seed, "Random seed")->capture_default_str();
    dataset_gen->add_option("--mesh-resolution", dg.mesh_resolution, "Marching-cubes lattice for synthetic shapes")
        ->capture_default_str();
    dataset_gen->add_option("--surface-samples", dg.sampling.n_surface, "Surface SDF samples per shape")
        ->capture_default_str();
    dataset_gen->add_option("--perturbed-samples", dg.sampling.n_perturbed, "Perturbed SDF samples per shape")
        ->capture_default_str();
    dataset_gen->add_option("--sigma", dg.sampling.sigma, "Perturbation standard deviation")->capture_default_str();
    dataset_gen->add_option("--split-fraction", dg.split_fraction, "Fraction of shapes without an isthmus");
    dataset_gen->add_option("--ranges", dg.ranges, "JSON file with generator parameter ranges")->check(CLI::ExistingFile);
    dataset_gen->add_option("--import-dir", dg.import_dir, "Import watertight .obj/.stl meshes instead")
        ->check(CLI::ExistingDirectory);
    dataset_gen->add_option("--reference", dg.reference, "Common reference point of imported meshes")
        ->expected(3)
        ->capture_default_str();
    dataset_gen->add_option("--mm-per-unit", dg.mm_per_unit, "Millimetres per unit-cube unit for reports");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train an auto-decoder model");
    train_cmd->add_option("--dataset", tr.dataset, "Dataset directory")->required();
    train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
    train_cmd->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--points", tr.points, "SDF samples per shape and step")->capture_default_str();
    train_cmd->add_option("--lr", tr.learning_rate, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--lambda", tr.lambda, "Latent regularisation weight")->capture_default_str();
    train_cmd->add_option("--corr-weight", tr.corr_weight, "Correlation loss weight (0 disables)")
        ->capture_default_str();
    train_cmd->add_option("--fixed-features,--fixed", tr.fixed, "Conditioned features: volume, isthmus, symmetry")->delimiter(',');
    train_cmd->add_option("--latent-dim", tr.latent_dim, "Trainable latent size")->capture_default_str();
    train_cmd->add_option("--hidden-width", tr.hidden_width, "Hidden layer width")->capture_default_str();
    train_cmd->add_option("--hidden-layers", tr.hidden_layers, "Hidden layer count")->capture_default_str();
    train_cmd->add_option("--init-sigma", tr.init_sigma, "Latent initialisation std")->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
    train_cmd->add_option("--precision", tr.precision, "Network arithmetic: float32 or float64")
        ->check(CLI::IsMember({"float32", "float64"}))
        ->capture_default_str();
    train_cmd->add_option("--log", tr.log, "Append per-epoch JSON lines here");
    train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Interval checkpoints (0 = off)")
        ->capture_default_str();
    train_cmd->add_option("--progress", tr.progress, "Report every N epochs on stderr (0 = quiet)")
        ->capture_default_str();

    ReconstructArgs rc;
    auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Reconstruct training shapes from their codes");
    reconstruct_cmd->add_option("--ckpt", rc.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    reconstruct_cmd->add_option("--out", rc.out, "Output directory")->required();
    reconstruct_cmd->add_option("--dataset", rc.dataset, "Dataset for Chamfer evaluation")->check(CLI::ExistingDirectory);
    reconstruct_cmd->add_option("--shape", rc.shapes, "Shape ids (default all)")->delimiter(',');
    reconstruct_cmd->add_option("--resolution", rc.resolution, "Grid resolution")->capture_default_str();
    reconstruct_cmd->add_option("--chamfer-samples", rc.chamfer_samples, "Surface samples per side")
        ->capture_default_str();

    GenerateArgs gn;
    auto* generate_cmd = app.add_subcommand("generate", "Sample a synthetic cohort");
    generate_cmd->add_option("--ckpt", gn.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    generate_cmd->add_option("--out", gn.out, "Output directory")->required();
    generate_cmd->add_option("--n", gn.n, "Cohort size")->capture_default_str();
    generate_cmd->add_option("--seed", gn.seed, "Random seed")->capture_default_str();
    generate_cmd->add_option("--resolution", gn.resolution, "Grid resolution")->capture_default_str();
    generate_cmd->add_flag("--no-measure", gn.no_measure, "Skip feature measurement");
    gn.overrides.add(generate_cmd, "Fixed");

    EditArgs ed;
    auto* edit_cmd = app.add_subcommand("edit", "Steer the features of a shape");
    edit_cmd->add_option("--ckpt", ed.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    edit_cmd->add_option("--out", ed.out, "Output directory")->required();
    edit_cmd->add_option("--shape", ed.shape, "Training shape id as base");
    edit_cmd->add_option("--code", ed.code, "JSON latent code as base")->check(CLI::ExistingFile);
    ed.targets.add(edit_cmd, "Target");
    edit_cmd->add_option("--sweep", ed.sweep, "Feature to sweep linearly");
    edit_cmd->add_option("--from", ed.from, "Sweep start (raw units)");
    edit_cmd->add_option("--to", ed.to, "Sweep end (raw units)");
    edit_cmd->add_option("--steps", ed.steps, "Sweep steps")->capture_default_str();
    edit_cmd->add_option("--resolution", ed.resolution, "Grid resolution")->capture_default_str();
    edit_cmd->add_option("--clamp", ed.clamp, "Clamp edited slots to +-N sigma (<= 0 disables)")->capture_default_str();

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Reconstruction, distribution and steerability report");
    evaluate_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint")->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--dataset", ev.dataset, "Training dataset")->check(CLI::ExistingDirectory);
    evaluate_cmd->add_option("--mesh", ev.mesh, "Only measure the features of this mesh")->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--out", ev.out, "Report JSON path");
    evaluate_cmd->add_option("--plots", ev.plots, "Directory for SVG plots");
    evaluate_cmd->add_option("--cohort", ev.cohort, "Generated cohort size")->capture_default_str();
    evaluate_cmd->add_option("--seed", ev.seed, "Cohort seed")->capture_default_str();
    evaluate_cmd->add_option("--resolution", ev.resolution, "Grid resolution")->capture_default_str();
    evaluate_cmd->add_option("--chamfer-samples", ev.chamfer_samples, "Surface samples per side")
        ->capture_default_str();
    evaluate_cmd->add_flag("--skip-reconstruction", ev.skip_reconstruction, "Skip the Chamfer evaluation");
    evaluate_cmd->add_option("--max-empty-rate", ev.max_empty_rate, "Fail when more cohort members are empty")
        ->capture_default_str();

    ServeArgs sv;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP API for reconstruct, generate and edit");
    serve_cmd->add_option("--ckpt", sv.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", sv.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", sv.port, "Port (0 picks a free one)")
        ->envname("INRSHAPE_PORT")
        ->capture_default_str();
    serve_cmd->add_option("--resolution", sv.resolution, "Default grid resolution")->capture_default_str();
    serve_cmd->add_option("--max-payload", sv.max_payload, "Mesh payload cap in bytes")->capture_default_str();
    serve_cmd->add_option("--clamp", sv.clamp, "Feature clamp in sigma")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage_error", e.what());
        return kUsageExit;
    }

    try {
        if (*dataset_gen) run_dataset_gen(dg);
        if (*train_cmd) run_train(tr);
        if (*reconstruct_cmd) run_reconstruct(rc);
        if (*generate_cmd) run_generate(gn);
        if (*edit_cmd) run_edit(ed);
        if (*evaluate_cmd) run_evaluate(ev);
        if (*serve_cmd) run_serve(sv);
    } catch (const Error& e) {
        print_error(to_string(e.code()), e.what());
        return e.code() == ErrorCode::Config ? kUsageExit : kFailureExit;
    } catch (const std::exception& e) {
        print_error("internal_error", e.what());
        return kFailureExit;
    }
    return 0;
}
