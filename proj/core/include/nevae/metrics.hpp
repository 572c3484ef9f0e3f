#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nevae/dataset.hpp"
#include "nevae/losses.hpp"
#include "nevae/model.hpp"

namespace nevae {

struct EvalConfig {
    std::uint64_t seed = 0;
    std::size_t mi_samples = 1;       // z-draws per datum for the mixture term
    std::size_t mi_mixture_cap = 2048;  // max mixture components / outer terms
    double au_threshold = 0.01;
    std::size_t batch_size = 256;
};

// Corpus-level diagnostics; nats per image.
struct DiagnosticsReport {
    double neg_elbo = 0.0;
    double kl = 0.0;
    double mi = 0.0;
    std::size_t au_count = 0;
    std::vector<double> activity;  // per-dimension A_z
    double mean_reencode_se = 0.0;
    double au_threshold = 0.01;
};

// Per-dimension variance (unbiased, divisor N-1) of posterior means across the
// dataset; mus is [N, n_z] with N >= 2.
std::vector<double> activity(const Tensor& mus);

// Strictly-greater threshold comparison.
std::size_t active_units(const std::vector<double>& activity, double threshold = 0.01);

// Average posterior-to-prior KL minus the aggregated-posterior-to-prior KL.
// The first term is closed form; the second is Monte Carlo with log q(z)
// estimated by a stable log-mean-exp over the dataset mixture. Datasets larger
// than mixture_cap are subsampled with a fixed stride.
double mutual_information(const EncoderParams& encoder, const Dataset& dataset,
                          std::size_t m_samples, Rng& rng, std::size_t mixture_cap = 2048);

// Mean re-encoding squared error over the dataset (one encode/decode/reencode
// pass per batch).
double reencode_error(const Model& model, const Dataset& dataset, Rng& rng,
                      std::size_t batch_size = 256);

DiagnosticsReport evaluate(const Model& model, const Dataset& dataset, const EvalConfig& config);

std::string diagnostics_json(const DiagnosticsReport& report);

// CSV row: run_id, epoch, neg_elbo, kl, mi, au, mean_reencode_se (header
// written when the file is created). Floats use 6 significant digits.
void append_metrics_csv(const std::filesystem::path& path, const std::string& run_id,
                        std::size_t epoch, const DiagnosticsReport& report);

// Long-format per-dimension activity: run_id, epoch, dim, activity.
void append_activity_csv(const std::filesystem::path& path, const std::string& run_id,
                         std::size_t epoch, const std::vector<double>& activity);

std::string format_g6(double v);

}  // namespace nevae
