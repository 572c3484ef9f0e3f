#include "nevae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace nevae {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

std::vector<std::size_t> strided_subset(std::size_t n, std::size_t cap) {
    if (n <= cap) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }
    std::vector<std::size_t> idx(cap);
    for (std::size_t i = 0; i < cap; ++i) idx[i] = i * n / cap;
    return idx;
}

double log_sum_exp(const std::vector<double>& xs) {
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

std::vector<double> activity(const Tensor& mus) {
    if (mus.rank() != 2)
        throw ShapeError("activity: expected [N, n_z] matrix, got " + shape_str(mus.shape()));
    const std::size_t n = mus.shape()[0];
    const std::size_t d = mus.shape()[1];
    if (n < 2) throw ValueError("activity: need at least 2 samples, got " + std::to_string(n));

    std::vector<double> mean(d, 0.0);
    const auto data = mus.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += data[i * d + j];
    for (auto& m : mean) m /= static_cast<double>(n);

    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = data[i * d + j] - mean[j];
            var[j] += c * c;
        }
    for (auto& v : var) v /= static_cast<double>(n - 1);
    return var;
}

std::size_t active_units(const std::vector<double>& activity, double threshold) {
    std::size_t count = 0;
    for (double a : activity)
        if (a > threshold) ++count;
    return count;
}

double mutual_information(const EncoderParams& encoder, const Dataset& dataset,
                          std::size_t m_samples, Rng& rng, std::size_t mixture_cap) {
    if (dataset.n == 0) throw ValueError("mutual_information: empty dataset");
    if (m_samples == 0) throw ValueError("mutual_information: m_samples must be >= 1");

    const auto idx = strided_subset(dataset.n, mixture_cap);
    const std::size_t m = idx.size();
    const std::size_t d = encoder.n_z;

    // Posterior parameters of the mixture members (no tape, forward only).
    Tensor x = dataset.batch(idx);
    Tensor heads = encoder.net.apply(x);
    const Tensor mu_t = slice(heads, 1, 0, d);
    const Tensor lv_t = slice(heads, 1, d, d);
    const auto mu = mu_t.data();
    const auto lv = lv_t.data();

    // Closed-form mean posterior-to-prior KL.
    double term1 = 0.0;
    for (std::size_t i = 0; i < m * d; ++i)
        term1 += 0.5 * (mu[i] * mu[i] + std::exp(lv[i]) - 1.0 - lv[i]);
    term1 /= static_cast<double>(m);

    // Monte Carlo aggregated-posterior divergence.
    std::vector<double> comp(m);
    std::vector<double> z(d);
    double term2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t s = 0; s < m_samples; ++s) {
            double log_p = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double sigma = std::exp(0.5 * lv[i * d + j]);
                z[j] = mu[i * d + j] + sigma * rng.normal();
                log_p += -kHalfLog2Pi - 0.5 * z[j] * z[j];
            }
            for (std::size_t c = 0; c < m; ++c) {
                double lq = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = z[j] - mu[c * d + j];
                    lq += -kHalfLog2Pi - 0.5 * lv[c * d + j] -
                          0.5 * diff * diff * std::exp(-lv[c * d + j]);
                }
                comp[c] = lq;
            }
            const double log_q = log_sum_exp(comp) - std::log(static_cast<double>(m));
            term2 += log_q - log_p;
        }
    }
    term2 /= static_cast<double>(m * m_samples);
    return term1 - term2;
}

double reencode_error(const Model& model, const Dataset& dataset, Rng& rng,
                      std::size_t batch_size) {
    double total = 0.0;
    std::vector<std::size_t> idx(batch_size);
    for (std::size_t start = 0; start < dataset.n; start += batch_size) {
        const std::size_t b = std::min(batch_size, dataset.n - start);
        idx.resize(b);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor x = dataset.batch(idx);
        const GaussianCode code = encode(x, model.encoder, rng);
        const Reconstruction recon = decode(code.z, model.decoder);
        const GaussianCode recode = reencode(recon, model.encoder, rng);
        const Tensor se = ne_se(code.z, recode.z);
        for (double v : se.data()) total += v;
    }
    return total / static_cast<double>(dataset.n);
}

DiagnosticsReport evaluate(const Model& model, const Dataset& dataset, const EvalConfig& config) {
    if (dataset.n == 0) throw ValueError("evaluate: empty dataset");
    DiagnosticsReport report;
    report.au_threshold = config.au_threshold;

    const std::size_t d = model.encoder.n_z;
    std::vector<double> all_mus(dataset.n * d);

    // Single-sample reconstruction estimate plus closed-form KL, batched with
    // a dedicated noise stream.
    Rng recon_rng(mix_seed(config.seed, 1));
    double recon_sum = 0.0;
    double kl_sum = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < dataset.n; start += config.batch_size) {
        const std::size_t b = std::min(config.batch_size, dataset.n - start);
        idx.resize(b);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor x = dataset.batch(idx);
        const GaussianCode code = encode(x, model.encoder, recon_rng);
        const Reconstruction recon = decode(code.z, model.decoder);
        const Tensor nll = sum_axis(bernoulli_nll(recon.logits, x), 1);
        for (double v : nll.data()) recon_sum += v;
        const Tensor kl = sum_axis(kl_diag_gauss_to_std(code.mu, code.log_var), 1);
        for (double v : kl.data()) kl_sum += v;
        const auto mus = code.mu.data();
        std::copy(mus.begin(), mus.end(),
                  all_mus.begin() + static_cast<std::ptrdiff_t>(start * d));
    }
    report.kl = kl_sum / static_cast<double>(dataset.n);
    report.neg_elbo = recon_sum / static_cast<double>(dataset.n) + report.kl;

    report.activity = dataset.n >= 2
                          ? activity(Tensor::from_data({dataset.n, d}, std::move(all_mus)))
                          : std::vector<double>(d, 0.0);
    report.au_count = active_units(report.activity, config.au_threshold);

    Rng mi_rng(mix_seed(config.seed, 2));
    report.mi = mutual_information(model.encoder, dataset, config.mi_samples, mi_rng,
                                   config.mi_mixture_cap);

    Rng re_rng(mix_seed(config.seed, 3));
    report.mean_reencode_se = reencode_error(model, dataset, re_rng, config.batch_size);
    return report;
}

std::string format_g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string diagnostics_json(const DiagnosticsReport& report) {
    nlohmann::json j;
    j["neg_elbo"] = report.neg_elbo;
    j["kl"] = report.kl;
    j["mi"] = report.mi;
    j["au_count"] = report.au_count;
    j["au_threshold"] = report.au_threshold;
    j["activity"] = report.activity;
    j["mean_reencode_se"] = report.mean_reencode_se;
    return j.dump(2);
}

namespace {

void append_row(const std::filesystem::path& path, const std::string& header,
                const std::string& row) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream os(path, std::ios::app);
    if (!os) throw IoError("cannot open " + path.string() + " for append");
    if (fresh) os << header << '\n';
    os << row << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace

void append_metrics_csv(const std::filesystem::path& path, const std::string& run_id,
                        std::size_t epoch, const DiagnosticsReport& report) {
    append_row(path, "run_id,epoch,neg_elbo,kl,mi,au,mean_reencode_se",
               run_id + "," + std::to_string(epoch) + "," + format_g6(report.neg_elbo) + "," +
                   format_g6(report.kl) + "," + format_g6(report.mi) + "," +
                   std::to_string(report.au_count) + "," + format_g6(report.mean_reencode_se));
}

void append_activity_csv(const std::filesystem::path& path, const std::string& run_id,
                         std::size_t epoch, const std::vector<double>& activity) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream os(path, std::ios::app);
    if (!os) throw IoError("cannot open " + path.string() + " for append");
    if (fresh) os << "run_id,epoch,dim,activity\n";
    for (std::size_t j = 0; j < activity.size(); ++j)
        os << run_id << ',' << epoch << ',' << j << ',' << format_g6(activity[j]) << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace nevae
