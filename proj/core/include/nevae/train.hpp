#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "nevae/adam.hpp"
#include "nevae/dataset.hpp"
#include "nevae/losses.hpp"
#include "nevae/metrics.hpp"
#include "nevae/model.hpp"

namespace nevae {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    LossConfig loss;

    std::size_t n_z = 32;
    std::vector<std::size_t> hidden = {512, 512};

    bool aggressive = false;
    std::size_t aggressive_max_inner = 100;
    std::size_t aggressive_stop_window = 10;
    bool reset_moments_after_aggressive = false;

    std::size_t eval_every = 0;  // diagnostics snapshot cadence; 0 disables
    EvalConfig eval;
    std::size_t curve_subset_cap = 1024;  // items for the per-epoch re-encode point

    std::filesystem::path checkpoint_dir;  // empty: no checkpoint files
    std::size_t checkpoint_every = 0;      // 0: final checkpoint only
};

struct EpochLog {
    std::size_t epoch = 0;
    LossReport mean_loss;  // sample-weighted mean over the epoch's batches
    double reencode_se = 0.0;
    std::optional<DiagnosticsReport> diagnostics;
};

struct RunLog {
    std::vector<EpochLog> epochs;
};

struct TrainResult {
    Model model;
    RunLog log;
};

// Deterministic given the seed: parameter init, shuffling, and noise all run
// on streams derived from it. Non-finite losses abort with the epoch/batch
// position in the message.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

// Encoder-only updates on one batch until the objective stops improving for
// stop_window consecutive steps (or max_inner). Decoder parameters are
// untouched. Returns the number of inner steps taken.
std::size_t aggressive_inner_steps(Model& model, const Tensor& x, const LossConfig& loss,
                                   double kl_weight, AdamState& encoder_opt,
                                   std::size_t max_inner, std::size_t stop_window, Rng& rng);

// losses.csv, metrics.csv, activity.csv, runlog.json under dir.
void write_run_log(const std::filesystem::path& dir, const std::string& run_id, const RunLog& log);

}  // namespace nevae
