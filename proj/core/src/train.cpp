#include "nevae/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "nevae/checkpoint.hpp"

namespace nevae {

namespace {

std::vector<Tensor> collect_grads(const std::vector<Tensor*>& params) {
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const auto* p : params) grads.push_back(p->grad_tensor());
    return grads;
}

std::vector<Tensor> deref(const std::vector<Tensor*>& params) {
    std::vector<Tensor> ts;
    ts.reserve(params.size());
    for (auto* p : params) ts.push_back(*p);
    return ts;
}

BatchLoss batch_step(Model& model, const std::vector<Tensor*>& watched, const Tensor& x,
                     const LossConfig& loss, double kl_weight, AdamState& opt, Rng& rng,
                     std::size_t epoch, std::size_t batch_index) {
    GradTape tape;
    for (auto* p : watched) tape.watch(*p);
    BatchLoss bundle;
    try {
        bundle = total_loss(x, model, loss, kl_weight, rng);
        tape.backward(bundle.total);
    } catch (const ValueError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index) + ": " + e.what());
    }
    auto params = deref(watched);
    auto grads = collect_grads(watched);
    adam_step(params, grads, opt);
    return bundle;
}

Dataset curve_subset(const Dataset& dataset, std::size_t cap) {
    if (dataset.n <= cap) return dataset;
    std::vector<std::size_t> idx(cap);
    for (std::size_t i = 0; i < cap; ++i) idx[i] = i * dataset.n / cap;
    return subset(dataset, idx);
}

}  // namespace

std::size_t aggressive_inner_steps(Model& model, const Tensor& x, const LossConfig& loss,
                                   double kl_weight, AdamState& encoder_opt,
                                   std::size_t max_inner, std::size_t stop_window, Rng& rng) {
    const auto watched = model.encoder_tensors();
    double best = std::numeric_limits<double>::infinity();
    std::size_t streak = 0;
    std::size_t steps = 0;
    while (steps < max_inner) {
        const BatchLoss bundle =
            batch_step(model, watched, x, loss, kl_weight, encoder_opt, rng, 0, steps);
        ++steps;
        if (bundle.report.total < best) {
            best = bundle.report.total;
            streak = 0;
        } else if (++streak >= stop_window) {
            break;
        }
    }
    return steps;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
    if (dataset.n == 0) throw ConfigError("train: empty dataset");
    if (config.batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    config.loss.validate();

    Rng init_rng(mix_seed(config.seed, 1));
    Rng shuffle_rng(mix_seed(config.seed, 2));
    Rng noise_rng(mix_seed(config.seed, 3));

    TrainResult result;
    result.model = make_model(dataset.pixels, config.hidden, config.n_z, init_rng);
    Model& model = result.model;

    AdamState enc_opt;
    AdamState dec_opt;
    enc_opt.lr = dec_opt.lr = config.lr;

    const Dataset curve_set = curve_subset(dataset, config.curve_subset_cap);

    const bool write_ckpt = !config.checkpoint_dir.empty();
    if (write_ckpt) std::filesystem::create_directories(config.checkpoint_dir);

    std::vector<std::size_t> order(dataset.n);
    std::iota(order.begin(), order.end(), 0);

    bool aggressive_active = config.aggressive;
    double prev_mi = -std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double kl_weight = kl_weight_for_epoch(config.loss, epoch);
        shuffle_rng.shuffle(order);

        LossReport mean{};
        std::size_t seen = 0;
        for (std::size_t start = 0, batch_index = 0; start < dataset.n;
             start += config.batch_size, ++batch_index) {
            const std::size_t b = std::min(config.batch_size, dataset.n - start);
            const Tensor x =
                dataset.batch(std::span<const std::size_t>(order).subspan(start, b));

            if (aggressive_active)
                aggressive_inner_steps(model, x, config.loss, kl_weight, enc_opt,
                                       config.aggressive_max_inner,
                                       config.aggressive_stop_window, noise_rng);

            BatchLoss bundle;
            {
                GradTape tape;
                auto all = model.params();
                for (auto* p : all) tape.watch(*p);
                try {
                    bundle = total_loss(x, model, config.loss, kl_weight, noise_rng);
                    tape.backward(bundle.total);
                } catch (const ValueError& e) {
                    throw TrainingError(
                        "epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch_index) + ": " + e.what() +
                        " (last good total " + std::to_string(mean.total) + ")");
                }
            }
            auto enc_params = deref(model.encoder_tensors());
            auto enc_grads = collect_grads(model.encoder_tensors());
            adam_step(enc_params, enc_grads, enc_opt);
            auto dec_params = deref(model.decoder_tensors());
            auto dec_grads = collect_grads(model.decoder_tensors());
            adam_step(dec_params, dec_grads, dec_opt);

            const double w = static_cast<double>(b);
            mean.recon_nll += w * bundle.report.recon_nll;
            mean.kl += w * bundle.report.kl;
            mean.ne_term += w * bundle.report.ne_term;
            mean.total += w * bundle.report.total;
            seen += b;
        }
        const double inv = 1.0 / static_cast<double>(seen);
        mean.recon_nll *= inv;
        mean.kl *= inv;
        mean.ne_term *= inv;
        mean.total *= inv;
        mean.kl_weight_applied = kl_weight;

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_loss = mean;
        {
            Rng curve_rng(mix_seed(config.eval.seed, 100 + epoch));
            entry.reencode_se = reencode_error(model, curve_set, curve_rng, config.eval.batch_size);
        }
        if (config.eval_every != 0 && (epoch + 1) % config.eval_every == 0)
            entry.diagnostics = evaluate(model, dataset, config.eval);
        result.log.epochs.push_back(std::move(entry));

        if (aggressive_active) {
            Rng mi_rng(mix_seed(config.eval.seed, 1000 + epoch));
            const double mi = mutual_information(model.encoder, dataset, 1, mi_rng,
                                                 std::min<std::size_t>(config.eval.mi_mixture_cap, 512));
            if (mi <= prev_mi) {
                aggressive_active = false;
                if (config.reset_moments_after_aggressive) {
                    enc_opt.reset_moments();
                    dec_opt.reset_moments();
                }
            }
            prev_mi = mi;
        }

        if (write_ckpt && config.checkpoint_every != 0 &&
            (epoch + 1) % config.checkpoint_every == 0) {
            std::ostringstream name;
            name << "checkpoint_epoch" << epoch << ".bin";
            save_checkpoint(config.checkpoint_dir / name.str(), model);
        }
    }

    if (write_ckpt) save_checkpoint(config.checkpoint_dir / "checkpoint_final.bin", model);
    return result;
}

void write_run_log(const std::filesystem::path& dir, const std::string& run_id,
                   const RunLog& log) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream os(dir / "losses.csv", std::ios::trunc);
        if (!os) throw IoError("cannot write " + (dir / "losses.csv").string());
        os << "epoch,recon_nll,kl,ne_term,kl_weight,total,reencode_se\n";
        for (const auto& e : log.epochs)
            os << e.epoch << ',' << format_g6(e.mean_loss.recon_nll) << ','
               << format_g6(e.mean_loss.kl) << ',' << format_g6(e.mean_loss.ne_term) << ','
               << format_g6(e.mean_loss.kl_weight_applied) << ',' << format_g6(e.mean_loss.total)
               << ',' << format_g6(e.reencode_se) << '\n';
    }

    for (const auto& e : log.epochs) {
        if (!e.diagnostics) continue;
        append_metrics_csv(dir / "metrics.csv", run_id, e.epoch, *e.diagnostics);
        append_activity_csv(dir / "activity.csv", run_id, e.epoch, e.diagnostics->activity);
    }

    nlohmann::json j;
    j["run_id"] = run_id;
    auto& epochs = j["epochs"];
    epochs = nlohmann::json::array();
    for (const auto& e : log.epochs) {
        nlohmann::json je;
        je["epoch"] = e.epoch;
        je["recon_nll"] = e.mean_loss.recon_nll;
        je["kl"] = e.mean_loss.kl;
        je["ne_term"] = e.mean_loss.ne_term;
        je["kl_weight"] = e.mean_loss.kl_weight_applied;
        je["total"] = e.mean_loss.total;
        je["reencode_se"] = e.reencode_se;
        if (e.diagnostics) {
            je["neg_elbo"] = e.diagnostics->neg_elbo;
            je["mi"] = e.diagnostics->mi;
            je["au"] = e.diagnostics->au_count;
        }
        epochs.push_back(std::move(je));
    }
    std::ofstream os(dir / "runlog.json", std::ios::trunc);
    if (!os) throw IoError("cannot write " + (dir / "runlog.json").string());
    os << j.dump(2) << '\n';
}

}  // namespace nevae
