// Command-line front end: train / eval / traverse / lso subcommands with
// reproducible flat-file run directories.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nevae/checkpoint.hpp"
#include "nevae/dataset.hpp"
#include "nevae/lso.hpp"
#include "nevae/metrics.hpp"
#include "nevae/run_config.hpp"
#include "nevae/train.hpp"
#include "nevae/traverse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct DataArgs {
    std::string data_path;
    std::string labels_path;
    bool synthetic = false;
    std::size_t syn_k = 4;
    std::size_t syn_dim = 784;
    std::size_t syn_n = 2048;
    double syn_noise = 0.0;
    std::uint64_t syn_seed = 0;
    std::string binarize_mode = "auto";  // auto: threshold for files, none for synthetic
    std::uint64_t binarize_seed = 0;
    std::size_t per_class = 0;
    std::uint64_t per_class_seed = 0;
    std::size_t take = 0;  // keep only the first N items
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--data", args.data_path, "IDX image file");
    cmd->add_option("--labels", args.labels_path, "IDX label file");
    cmd->add_flag("--synthetic", args.synthetic, "Generate a synthetic low-rank dataset");
    cmd->add_option("--syn-k", args.syn_k, "Synthetic intrinsic dimension");
    cmd->add_option("--syn-dim", args.syn_dim, "Synthetic ambient (pixel) dimension");
    cmd->add_option("--syn-n", args.syn_n, "Synthetic sample count");
    cmd->add_option("--syn-noise", args.syn_noise, "Synthetic pixel noise sigma");
    cmd->add_option("--syn-seed", args.syn_seed, "Synthetic generator seed");
    cmd->add_option("--binarize", args.binarize_mode,
                    "Binarization: threshold | stochastic | none | auto");
    cmd->add_option("--binarize-seed", args.binarize_seed, "Seed for stochastic binarization");
    cmd->add_option("--per-class", args.per_class, "Stratified subsample size per class");
    cmd->add_option("--per-class-seed", args.per_class_seed, "Seed for the stratified subsample");
    cmd->add_option("--take", args.take, "Keep only the first N items");
}

struct LoadedData {
    nevae::Dataset dataset;
    std::uint64_t fingerprint = 0;
    std::string source;
};

LoadedData load_data(const DataArgs& args) {
    LoadedData out;
    if (args.synthetic == args.data_path.empty()) {
        // exactly one of --data / --synthetic
        if (args.synthetic)
            throw nevae::ConfigError("pass either --data or --synthetic, not both");
        throw nevae::ConfigError("no dataset: pass --data <idx file> or --synthetic");
    }

    bool from_file = !args.data_path.empty();
    if (from_file) {
        if (!fs::exists(args.data_path))
            throw nevae::ConfigError("dataset file not found: " + args.data_path);
        std::optional<fs::path> labels;
        if (!args.labels_path.empty()) {
            if (!fs::exists(args.labels_path))
                throw nevae::ConfigError("label file not found: " + args.labels_path);
            labels = args.labels_path;
        }
        out.dataset = nevae::load_idx(args.data_path, labels);
        out.fingerprint = nevae::hash_file(args.data_path);
        if (labels) out.fingerprint ^= nevae::hash_file(*labels);
        out.source = args.data_path;
    } else {
        nevae::SyntheticSpec spec;
        spec.intrinsic_dim = args.syn_k;
        spec.ambient_dim = args.syn_dim;
        spec.n_samples = args.syn_n;
        spec.noise_sigma = args.syn_noise;
        spec.seed = args.syn_seed;
        out.dataset = nevae::make_synthetic(spec);
        out.fingerprint = nevae::hash_dataset(out.dataset);
        out.source = "synthetic(k=" + std::to_string(spec.intrinsic_dim) +
                     ",dim=" + std::to_string(spec.ambient_dim) +
                     ",n=" + std::to_string(spec.n_samples) + ")";
    }

    std::string mode = args.binarize_mode;
    if (mode == "auto") mode = from_file ? "threshold" : "none";
    if (mode == "threshold")
        out.dataset = nevae::binarize(out.dataset, nevae::BinarizeMode::Threshold);
    else if (mode == "stochastic")
        out.dataset =
            nevae::binarize(out.dataset, nevae::BinarizeMode::Stochastic, args.binarize_seed);
    else if (mode != "none")
        throw nevae::ConfigError("unknown --binarize mode '" + mode + "'");

    if (args.per_class > 0)
        out.dataset =
            nevae::subsample_per_class(out.dataset, args.per_class, args.per_class_seed);
    if (args.take > 0 && args.take < out.dataset.n) {
        std::vector<std::size_t> idx(args.take);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        out.dataset = nevae::subset(out.dataset, idx);
    }
    return out;
}

fs::path output_root(const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv("NEVAE_RUN_DIR")) return env;
    return "runs";
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw nevae::ConfigError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw nevae::ConfigError(std::string(what) + ": empty list");
    return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    DataArgs data;
    std::string config_file;
    std::string run_id;
    std::string out;
    std::string variant;
    std::string anneal;
    std::string hidden;
    std::size_t nz = 0;
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    double lr = 0.0;
    double beta = 0.0;
    double cap = 0.0;
    double ne_weight = 0.0;
    std::uint64_t seed = 0;
    bool aggressive = false;
    std::size_t eval_every = 0;
    std::size_t checkpoint_every = 0;
    bool force = false;
};

int run_train(const TrainArgs& args, const CLI::App& cmd) {
    nevae::TrainConfig config;
    config.loss.anneal = nevae::AnnealSchedule{};  // 0.1 -> 1 over 10 epochs
    config.eval_every = 0;

    if (!args.config_file.empty()) {
        if (!fs::exists(args.config_file))
            throw nevae::ConfigError("config file not found: " + args.config_file);
        nevae::apply_train_config(nevae::parse_key_value_file(args.config_file), config);
    }

    // Flags override the file.
    if (cmd.count("--variant")) config.loss.variant = nevae::variant_from_name(args.variant);
    if (cmd.count("--nz")) config.n_z = args.nz;
    if (cmd.count("--epochs")) config.epochs = args.epochs;
    if (cmd.count("--batch-size")) config.batch_size = args.batch_size;
    if (cmd.count("--lr")) config.lr = args.lr;
    if (cmd.count("--seed")) config.seed = args.seed;
    if (cmd.count("--beta")) config.loss.beta = args.beta;
    if (cmd.count("--cap")) config.loss.cap_c = args.cap;
    if (cmd.count("--ne-weight")) config.loss.ne_weight = args.ne_weight;
    if (cmd.count("--aggressive")) config.aggressive = true;
    if (cmd.count("--eval-every")) config.eval_every = args.eval_every;
    if (cmd.count("--checkpoint-every")) config.checkpoint_every = args.checkpoint_every;
    if (cmd.count("--anneal")) {
        if (args.anneal == "none")
            config.loss.anneal.reset();
        else
            nevae::apply_train_config({{"anneal", args.anneal}}, config);
    }
    if (cmd.count("--hidden")) nevae::apply_train_config({{"hidden", args.hidden}}, config);
    config.loss.validate();

    const LoadedData loaded = load_data(args.data);

    const std::string run_id =
        !args.run_id.empty() ? args.run_id
                             : nevae::variant_name(config.loss.variant) + "_nz" +
                                   std::to_string(config.n_z) + "_seed" +
                                   std::to_string(config.seed);
    const fs::path run_dir = output_root(args.out) / run_id;
    if (fs::exists(run_dir)) {
        if (!args.force)
            throw nevae::ConfigError("run directory already exists: " + run_dir.string() +
                                     " (use --force to replace)");
        fs::remove_all(run_dir);
    }
    fs::create_directories(run_dir);
    config.checkpoint_dir = run_dir;

    // Manifest goes first so an aborted run still identifies itself.
    {
        json manifest;
        manifest["run_id"] = run_id;
        manifest["seed"] = config.seed;
        manifest["dataset"] = {{"source", loaded.source},
                               {"fingerprint", hex64(loaded.fingerprint)},
                               {"n", loaded.dataset.n},
                               {"pixels", loaded.dataset.pixels}};
        manifest["config"] = nevae::train_config_to_kv(config);
        manifest["artifacts"] = {{"checkpoint_final", "checkpoint_final.bin"},
                                 {"losses_csv", "losses.csv"},
                                 {"metrics_csv", "metrics.csv"},
                                 {"activity_csv", "activity.csv"},
                                 {"runlog_json", "runlog.json"}};
        std::ofstream os(run_dir / "manifest.json", std::ios::trunc);
        if (!os) throw nevae::IoError("cannot write " + (run_dir / "manifest.json").string());
        os << manifest.dump(2) << '\n';
    }

    const nevae::TrainResult result = nevae::train(loaded.dataset, config);
    nevae::write_run_log(run_dir, run_id, result.log);

    if (!result.log.epochs.empty()) {
        const auto& last = result.log.epochs.back().mean_loss;
        std::cout << "run " << run_id << ": " << result.log.epochs.size()
                  << " epochs, final total " << nevae::format_g6(last.total) << " (recon "
                  << nevae::format_g6(last.recon_nll) << ", kl " << nevae::format_g6(last.kl)
                  << ", ne " << nevae::format_g6(last.ne_term) << ")\n";
    }
    std::cout << run_dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    DataArgs data;
    std::string checkpoint;
    std::string run_id = "eval";
    std::string out;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    std::size_t mi_samples = 1;
    std::size_t mi_cap = 2048;
    bool activity_csv = false;
};

nevae::Model load_model(const std::string& checkpoint) {
    if (checkpoint.empty()) throw nevae::ConfigError("--checkpoint is required");
    if (!fs::exists(checkpoint))
        throw nevae::ConfigError("checkpoint not found: " + checkpoint);
    return nevae::load_checkpoint(checkpoint);
}

int run_eval(const EvalArgs& args) {
    const nevae::Model model = load_model(args.checkpoint);
    const LoadedData loaded = load_data(args.data);

    nevae::EvalConfig config;
    config.seed = args.seed;
    config.mi_samples = args.mi_samples;
    config.mi_mixture_cap = args.mi_cap;
    const nevae::DiagnosticsReport report = nevae::evaluate(model, loaded.dataset, config);

    const fs::path out_dir = output_root(args.out);
    fs::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "diagnostics.json", std::ios::trunc);
        if (!os) throw nevae::IoError("cannot write " + (out_dir / "diagnostics.json").string());
        os << nevae::diagnostics_json(report) << '\n';
    }
    nevae::append_metrics_csv(out_dir / "metrics.csv", args.run_id, args.epoch, report);
    if (args.activity_csv)
        nevae::append_activity_csv(out_dir / "activity.csv", args.run_id, args.epoch,
                                   report.activity);

    std::cout << nevae::diagnostics_json(report) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// traverse

struct TraverseArgs {
    DataArgs data;
    std::string checkpoint;
    std::string out;
    std::string zero_dims;
    bool random = false;
    std::size_t dim = 0;
    std::size_t points = 100;
    double lo = -10.0;
    double hi = 10.0;
    double radius = 10.0;
    std::uint64_t seed = 0;
    std::size_t zero_top = 0;
};

int run_traverse(const TraverseArgs& args, const CLI::App& cmd) {
    const nevae::Model model = load_model(args.checkpoint);
    const std::size_t n_z = model.encoder.n_z;

    nevae::TraverseSpec spec;
    spec.kind = args.random ? nevae::TraverseKind::RandomDirection
                            : nevae::TraverseKind::SingleDim;
    spec.dim = args.dim;
    spec.n_points = args.points;
    spec.lo = args.lo;
    spec.hi = args.hi;
    spec.radius = args.radius;
    spec.seed = args.seed;

    if (cmd.count("--zero-dims")) {
        for (double v : parse_double_list(args.zero_dims, "--zero-dims"))
            spec.zero_dims.push_back(static_cast<std::size_t>(v));
    }
    if (args.zero_top > 0) {
        // Most-active dimensions are measured on the provided dataset.
        const LoadedData loaded = load_data(args.data);
        nevae::EvalConfig config;
        config.seed = args.seed;
        std::vector<std::size_t> idx(loaded.dataset.n);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const nevae::Tensor x = loaded.dataset.batch(idx);
        const nevae::Tensor heads = model.encoder.net.apply(x);
        const auto act = nevae::activity(nevae::slice(heads, 1, 0, n_z));
        spec.zero_dims = nevae::zero_top_active(act, args.zero_top);
    }

    const nevae::Tensor codes = nevae::traverse_codes(spec, n_z);
    const auto cols = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(spec.n_points))));
    const std::size_t rows = (spec.n_points + cols - 1) / cols;
    const nevae::GrayImage grid = nevae::render_grid(codes, model.decoder, rows, cols);

    const fs::path out_dir = output_root(args.out);
    fs::create_directories(out_dir);
    const std::string name = nevae::traverse_filename(spec);
    nevae::write_pgm(out_dir / name, grid);

    json index;
    index["kind"] = spec.kind == nevae::TraverseKind::SingleDim ? "single_dim" : "random_direction";
    if (spec.kind == nevae::TraverseKind::SingleDim)
        index["dim"] = spec.dim;
    else
        index["seed"] = spec.seed;
    index["file"] = name;
    index["rows"] = rows;
    index["cols"] = cols;
    index["zero_dims"] = spec.zero_dims;
    auto& jcodes = index["codes"];
    jcodes = json::array();
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < n_z; ++j) row.push_back(codes.at(i, j));
        jcodes.push_back(std::move(row));
    }
    const std::string index_name = name.substr(0, name.size() - 4) + ".json";
    std::ofstream os(out_dir / index_name, std::ios::trunc);
    if (!os) throw nevae::IoError("cannot write " + (out_dir / index_name).string());
    os << index.dump(2) << '\n';

    std::cout << (out_dir / name).string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// lso

struct LsoArgs {
    DataArgs data;
    std::vector<std::string> checkpoints;
    std::string out;
    std::string thresholds = "0.01,0.005,0.001,0";
    std::string inits = "random_prior,encoder_mean";
    std::size_t targets = 50;
    std::size_t max_iters = 5000;
    std::size_t window = 10;
    double lr = 0.05;
    std::uint64_t seed = 0;
};

int run_lso(const LsoArgs& args) {
    if (args.checkpoints.empty()) throw nevae::ConfigError("--checkpoint is required");
    std::vector<std::pair<std::string, nevae::Model>> models;
    for (const auto& path : args.checkpoints)
        models.emplace_back(fs::path(path).stem().string(), load_model(path));

    const LoadedData loaded = load_data(args.data);

    nevae::LsoBenchmarkConfig config;
    config.base.n_targets = args.targets;
    config.base.max_iters = args.max_iters;
    config.base.stop_window = args.window;
    config.base.lr = args.lr;
    config.base.seed = args.seed;
    config.thresholds = parse_double_list(args.thresholds, "--thresholds");
    config.inits.clear();
    {
        std::stringstream ss(args.inits);
        std::string item;
        while (std::getline(ss, item, ',')) config.inits.push_back(nevae::lso_init_from_name(item));
    }

    const nevae::LsoReport report = nevae::lso_benchmark(loaded.dataset, models, config);

    const fs::path out_dir = output_root(args.out);
    fs::create_directories(out_dir);
    nevae::write_lso_runs_csv(out_dir / "lso_runs.csv", report);
    nevae::write_lso_distances_csv(out_dir / "lso_distances.csv", report);

    for (const auto& [id, model] : models)
        for (double threshold : config.thresholds)
            for (auto init : config.inits)
                std::cout << id << " threshold " << nevae::format_g6(threshold) << " init "
                          << nevae::lso_init_name(init) << ": mean iters "
                          << nevae::format_g6(report.mean_iterations(id, threshold, init))
                          << ", mean final loss "
                          << nevae::format_g6(report.mean_final_loss(id, threshold, init)) << '\n';
    std::cout << (out_dir / "lso_runs.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NE-VAE trainer and latent-space diagnostics"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model into a run directory");
    add_data_options(train_cmd, train_args.data);
    train_cmd->add_option("--config", train_args.config_file, "Run-config file (key = value)");
    train_cmd->add_option("--run-id", train_args.run_id, "Run directory name");
    train_cmd->add_option("--out", train_args.out, "Output root (default $NEVAE_RUN_DIR or ./runs)");
    train_cmd->add_option("--variant", train_args.variant, "vanilla | beta | ne_se | ne_lp");
    train_cmd->add_option("--nz", train_args.nz, "Latent dimension count");
    train_cmd->add_option("--epochs", train_args.epochs, "Training epochs");
    train_cmd->add_option("--batch-size", train_args.batch_size, "Batch size");
    train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
    train_cmd->add_option("--seed", train_args.seed, "Run seed");
    train_cmd->add_option("--beta", train_args.beta, "KL weight for the beta variant");
    train_cmd->add_option("--cap", train_args.cap, "Capping threshold c for ne_lp");
    train_cmd->add_option("--ne-weight", train_args.ne_weight, "Weight on the re-encoding term");
    train_cmd->add_option("--anneal", train_args.anneal, "start:end:epochs or none");
    train_cmd->add_option("--hidden", train_args.hidden, "Hidden widths, e.g. 512,512");
    train_cmd->add_flag("--aggressive", train_args.aggressive, "Aggressive encoder training");
    train_cmd->add_option("--eval-every", train_args.eval_every, "Diagnostics cadence in epochs");
    train_cmd->add_option("--checkpoint-every", train_args.checkpoint_every,
                          "Checkpoint cadence in epochs");
    train_cmd->add_flag("--force", train_args.force, "Replace an existing run directory");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Diagnostics for a checkpoint");
    add_data_options(eval_cmd, eval_args.data);
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file");
    eval_cmd->add_option("--run-id", eval_args.run_id, "Row id for CSV output");
    eval_cmd->add_option("--epoch", eval_args.epoch, "Epoch tag for CSV output");
    eval_cmd->add_option("--out", eval_args.out, "Output directory");
    eval_cmd->add_option("--seed", eval_args.seed, "Evaluation seed");
    eval_cmd->add_option("--mi-samples", eval_args.mi_samples, "MI draws per datum");
    eval_cmd->add_option("--mi-cap", eval_args.mi_cap, "MI mixture size cap");
    eval_cmd->add_flag("--activity-csv", eval_args.activity_csv,
                       "Also write per-dimension activity rows");

    TraverseArgs traverse_args;
    auto* traverse_cmd = app.add_subcommand("traverse", "Latent traverse image grids");
    add_data_options(traverse_cmd, traverse_args.data);
    traverse_cmd->add_option("--checkpoint", traverse_args.checkpoint, "Checkpoint file");
    traverse_cmd->add_option("--out", traverse_args.out, "Output directory");
    traverse_cmd->add_option("--dim", traverse_args.dim, "Dimension for single-dim traverse");
    traverse_cmd->add_flag("--random", traverse_args.random, "Random-direction traverse");
    traverse_cmd->add_option("--points", traverse_args.points, "Points per traverse");
    traverse_cmd->add_option("--lo", traverse_args.lo, "Grid start (single-dim)");
    traverse_cmd->add_option("--hi", traverse_args.hi, "Grid end (single-dim)");
    traverse_cmd->add_option("--radius", traverse_args.radius, "Endpoint norm (random)");
    traverse_cmd->add_option("--seed", traverse_args.seed, "Direction seed");
    traverse_cmd->add_option("--zero-top", traverse_args.zero_top,
                             "Zero the k most active dims (needs --data)");
    traverse_cmd->add_option("--zero-dims", traverse_args.zero_dims,
                             "Explicit dims to pin to zero, e.g. 0,3");

    LsoArgs lso_args;
    auto* lso_cmd = app.add_subcommand("lso", "Latent-space optimization benchmark");
    add_data_options(lso_cmd, lso_args.data);
    lso_cmd->add_option("--checkpoint", lso_args.checkpoints, "Checkpoint(s) to compare");
    lso_cmd->add_option("--out", lso_args.out, "Output directory");
    lso_cmd->add_option("--targets", lso_args.targets, "Number of target images");
    lso_cmd->add_option("--thresholds", lso_args.thresholds, "Comma list of stop thresholds");
    lso_cmd->add_option("--inits", lso_args.inits, "Comma list of init kinds");
    lso_cmd->add_option("--max-iters", lso_args.max_iters, "Iteration cap per trial");
    lso_cmd->add_option("--window", lso_args.window, "Stop window (consecutive steps)");
    lso_cmd->add_option("--lr", lso_args.lr, "Adam learning rate on the code");
    lso_cmd->add_option("--seed", lso_args.seed, "Benchmark seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*train_cmd) return run_train(train_args, *train_cmd);
        if (*eval_cmd) return run_eval(eval_args);
        if (*traverse_cmd) return run_traverse(traverse_args, *traverse_cmd);
        if (*lso_cmd) return run_lso(lso_args);
    } catch (const nevae::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nevae::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
