#include "nevae/lso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "nevae/adam.hpp"
#include "nevae/metrics.hpp"

namespace nevae {

std::string lso_init_name(LsoInit init) {
    return init == LsoInit::RandomPrior ? "random_prior" : "encoder_mean";
}

LsoInit lso_init_from_name(const std::string& name) {
    if (name == "random_prior") return LsoInit::RandomPrior;
    if (name == "encoder_mean") return LsoInit::EncoderMean;
    throw ConfigError("unknown lso init '" + name + "'");
}

LsoTraceEntry lso_optimize(const Tensor& target_image, const DecoderParams& decoder,
                           const LsoConfig& config, const Tensor& init_code) {
    if (init_code.numel() != decoder.n_z)
        throw ShapeError("lso_optimize: init code " + shape_str(init_code.shape()) +
                         " does not match n_z = " + std::to_string(decoder.n_z));
    if (target_image.numel() != decoder.pixels)
        throw ShapeError("lso_optimize: target " + shape_str(target_image.shape()) +
                         " does not match " + std::to_string(decoder.pixels) + " pixels");

    const Tensor x = Tensor::from_data({1, decoder.pixels},
                                       {target_image.data().begin(), target_image.data().end()});
    Tensor z = Tensor::from_data({1, decoder.n_z},
                                 {init_code.data().begin(), init_code.data().end()});

    AdamState opt;
    opt.lr = config.lr;
    std::vector<Tensor> zs{z};

    LsoTraceEntry entry;
    double best = std::numeric_limits<double>::infinity();
    std::size_t streak = 0;

    auto eval_with_grad = [&]() {
        GradTape tape;
        tape.watch(zs[0]);
        const Reconstruction recon = decode(zs[0], decoder);
        const Tensor loss = sum_all(square(sub(x, recon.probs)));
        tape.backward(loss);
        return loss.item();
    };

    auto note = [&](std::size_t step, double loss) {
        entry.loss_curve.push_back(loss);
        if (loss < best) {
            best = loss;
            entry.best_history.emplace_back(
                step, std::vector<double>(zs[0].data().begin(), zs[0].data().end()), loss);
            return true;
        }
        return false;
    };

    note(0, eval_with_grad());
    entry.iterations = config.max_iters;
    for (std::size_t step = 1; step <= config.max_iters; ++step) {
        std::vector<Tensor> grads{zs[0].grad_tensor()};
        adam_step(zs, grads, opt);
        const double prev_best = best;
        const bool improved = note(step, eval_with_grad());
        const double improvement = prev_best - entry.loss_curve.back();
        (void)improved;
        if (improvement <= config.stop_threshold) {
            if (++streak >= config.stop_window) {
                entry.iterations = step;
                break;
            }
        } else {
            streak = 0;
        }
    }

    const auto& [bstep, bcode, bloss] = entry.best_history.back();
    (void)bstep;
    entry.final_code = Tensor::from_data({decoder.n_z}, bcode);
    entry.final_loss = bloss;
    return entry;
}

std::size_t stop_iteration(std::span<const double> loss_curve, double threshold,
                           std::size_t stop_window) {
    if (loss_curve.empty()) return 0;
    double best = loss_curve[0];
    std::size_t streak = 0;
    for (std::size_t step = 1; step < loss_curve.size(); ++step) {
        const double improvement = best - loss_curve[step];
        best = std::min(best, loss_curve[step]);
        if (improvement <= threshold) {
            if (++streak >= stop_window) return step;
        } else {
            streak = 0;
        }
    }
    return loss_curve.size() - 1;
}

namespace {

std::vector<double> best_code_up_to(const LsoTraceEntry& entry, std::size_t step) {
    const std::vector<double>* code = &std::get<1>(entry.best_history.front());
    for (const auto& [s, c, l] : entry.best_history) {
        if (s > step) break;
        code = &c;
    }
    return *code;
}

double best_loss_up_to(const LsoTraceEntry& entry, std::size_t step) {
    double loss = std::get<2>(entry.best_history.front());
    for (const auto& [s, c, l] : entry.best_history) {
        if (s > step) break;
        loss = l;
    }
    return loss;
}

double sq_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

LsoReport lso_benchmark(const Dataset& targets,
                        const std::vector<std::pair<std::string, Model>>& models,
                        const LsoBenchmarkConfig& config) {
    if (models.empty()) throw ConfigError("lso_benchmark: no models");
    const std::size_t n_z = models.front().second.decoder.n_z;
    for (const auto& [id, model] : models) {
        if (model.decoder.n_z != n_z || model.decoder.pixels != targets.pixels)
            throw ShapeError("lso_benchmark: model '" + id + "' shape (n_z " +
                             std::to_string(model.decoder.n_z) + ", pixels " +
                             std::to_string(model.decoder.pixels) +
                             ") incompatible with the benchmark");
    }

    const std::size_t n_targets = std::min(config.base.n_targets, targets.n);
    double tightest = config.thresholds.empty() ? config.base.stop_threshold
                                                : *std::min_element(config.thresholds.begin(),
                                                                    config.thresholds.end());
    LsoConfig run_cfg = config.base;
    run_cfg.stop_threshold = tightest;

    LsoReport report;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto& [model_id, model] = models[mi];
        for (std::size_t t = 0; t < n_targets; ++t) {
            const Tensor target = Tensor::from_data(
                {targets.pixels}, {targets.row(t).begin(), targets.row(t).end()});

            std::vector<std::pair<LsoInit, LsoTraceEntry>> trials;
            for (std::size_t ii = 0; ii < config.inits.size(); ++ii) {
                const LsoInit init = config.inits[ii];
                Tensor init_code;
                if (init == LsoInit::RandomPrior) {
                    Rng rng(mix_seed(config.base.seed, (mi * targets.n + t) * 8 + ii));
                    init_code = Tensor::from_data({n_z}, rng.normal_vector(n_z));
                } else {
                    const Tensor xb = Tensor::from_data(
                        {1, targets.pixels}, {targets.row(t).begin(), targets.row(t).end()});
                    const Tensor heads = model.encoder.net.apply(xb);
                    init_code = slice(heads, 1, 0, n_z);
                }
                trials.emplace_back(init,
                                    lso_optimize(target, model.decoder, run_cfg, init_code));
            }

            for (double threshold : config.thresholds) {
                for (const auto& [init, entry] : trials) {
                    const std::size_t stop =
                        stop_iteration(entry.loss_curve, threshold, config.base.stop_window);
                    report.runs.push_back({model_id, t, init, threshold, stop,
                                           best_loss_up_to(entry, stop)});
                }
                for (std::size_t a = 0; a < trials.size(); ++a)
                    for (std::size_t b = a + 1; b < trials.size(); ++b) {
                        const std::size_t stop_a = stop_iteration(
                            trials[a].second.loss_curve, threshold, config.base.stop_window);
                        const std::size_t stop_b = stop_iteration(
                            trials[b].second.loss_curve, threshold, config.base.stop_window);
                        const auto code_a = best_code_up_to(trials[a].second, stop_a);
                        const auto code_b = best_code_up_to(trials[b].second, stop_b);
                        report.distances.push_back({model_id, threshold, t, trials[a].first,
                                                    trials[b].first,
                                                    sq_distance(code_a, code_b)});
                    }
            }
        }
    }
    return report;
}

double LsoReport::mean_iterations(const std::string& model_id, double threshold,
                                  LsoInit init) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : runs)
        if (r.model_id == model_id && r.threshold == threshold && r.init == init) {
            sum += static_cast<double>(r.iterations);
            ++count;
        }
    return count ? sum / static_cast<double>(count) : 0.0;
}

double LsoReport::mean_final_loss(const std::string& model_id, double threshold,
                                  LsoInit init) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : runs)
        if (r.model_id == model_id && r.threshold == threshold && r.init == init) {
            sum += r.final_loss;
            ++count;
        }
    return count ? sum / static_cast<double>(count) : 0.0;
}

double LsoReport::mean_sq_dist(const std::string& model_id, double threshold) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& d : distances)
        if (d.model_id == model_id && d.threshold == threshold) {
            sum += d.sq_dist;
            ++count;
        }
    return count ? sum / static_cast<double>(count) : 0.0;
}

void write_lso_runs_csv(const std::filesystem::path& path, const LsoReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << "model_id,target_id,init_kind,threshold,iterations,final_loss\n";
    for (const auto& r : report.runs)
        os << r.model_id << ',' << r.target_id << ',' << lso_init_name(r.init) << ','
           << format_g6(r.threshold) << ',' << r.iterations << ',' << format_g6(r.final_loss)
           << '\n';
}

void write_lso_distances_csv(const std::filesystem::path& path, const LsoReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << "model_id,threshold,target_id,init_a,init_b,sq_dist\n";
    for (const auto& d : report.distances)
        os << d.model_id << ',' << format_g6(d.threshold) << ',' << d.target_id << ','
           << lso_init_name(d.init_a) << ',' << lso_init_name(d.init_b) << ','
           << format_g6(d.sq_dist) << '\n';
}

}  // namespace nevae
