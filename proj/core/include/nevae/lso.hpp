#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nevae/dataset.hpp"
#include "nevae/model.hpp"

namespace nevae {

enum class LsoInit { RandomPrior, EncoderMean };

std::string lso_init_name(LsoInit init);
LsoInit lso_init_from_name(const std::string& name);

struct LsoConfig {
    std::size_t n_targets = 50;
    double stop_threshold = 0.0;
    std::size_t stop_window = 10;
    std::size_t max_iters = 5000;
    double lr = 0.05;
    std::uint64_t seed = 0;
};

// One optimization trajectory. The stop rule watches improvement over the
// best loss seen so far: once `stop_window` consecutive steps each improve by
// at most `stop_threshold`, the trial stops (threshold 0 therefore stops on a
// flat best-so-far). Reported code/loss are the best visited.
struct LsoTraceEntry {
    std::vector<double> loss_curve;  // loss at init plus one value per step
    std::size_t iterations = 0;
    Tensor final_code;
    double final_loss = 0.0;
    // (step, code, loss) every time the best improved; [0] is the init point.
    std::vector<std::tuple<std::size_t, std::vector<double>, double>> best_history;
};

// Minimizes sum((target - decode_mean(z))^2) over z with Adam; the decoder
// parameters receive no gradient and are never updated.
LsoTraceEntry lso_optimize(const Tensor& target_image, const DecoderParams& decoder,
                           const LsoConfig& config, const Tensor& init_code);

// Stop step implied by a recorded loss curve for a given threshold; curves are
// threshold-independent, so looser thresholds can be replayed from one run.
std::size_t stop_iteration(std::span<const double> loss_curve, double threshold,
                           std::size_t stop_window);

struct LsoRun {
    std::string model_id;
    std::size_t target_id = 0;
    LsoInit init = LsoInit::RandomPrior;
    double threshold = 0.0;
    std::size_t iterations = 0;
    double final_loss = 0.0;
};

struct LsoDistance {
    std::string model_id;
    double threshold = 0.0;
    std::size_t target_id = 0;
    LsoInit init_a = LsoInit::RandomPrior;
    LsoInit init_b = LsoInit::EncoderMean;
    double sq_dist = 0.0;
};

struct LsoReport {
    std::vector<LsoRun> runs;
    std::vector<LsoDistance> distances;

    double mean_iterations(const std::string& model_id, double threshold, LsoInit init) const;
    double mean_final_loss(const std::string& model_id, double threshold, LsoInit init) const;
    double mean_sq_dist(const std::string& model_id, double threshold) const;
};

struct LsoBenchmarkConfig {
    LsoConfig base;
    std::vector<double> thresholds = {0.01, 0.005, 0.001, 0.0};
    std::vector<LsoInit> inits = {LsoInit::RandomPrior, LsoInit::EncoderMean};
};

// Shares one trajectory per (model, target, init) across the threshold grid:
// the trajectory is run at the tightest threshold and looser stop points are
// replayed from the recorded curve.
LsoReport lso_benchmark(const Dataset& targets,
                        const std::vector<std::pair<std::string, Model>>& models,
                        const LsoBenchmarkConfig& config);

void write_lso_runs_csv(const std::filesystem::path& path, const LsoReport& report);
void write_lso_distances_csv(const std::filesystem::path& path, const LsoReport& report);

}  // namespace nevae
