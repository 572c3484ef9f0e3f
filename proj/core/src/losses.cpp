#include "nevae/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nevae {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 * pi)
constexpr double kVarFloor = 1e-8;
}  // namespace

std::string variant_name(LossVariant v) {
    switch (v) {
        case LossVariant::Vanilla: return "vanilla";
        case LossVariant::Beta: return "beta";
        case LossVariant::NeSe: return "ne_se";
        case LossVariant::NeLp: return "ne_lp";
    }
    return "vanilla";
}

LossVariant variant_from_name(const std::string& name) {
    if (name == "vanilla") return LossVariant::Vanilla;
    if (name == "beta") return LossVariant::Beta;
    if (name == "ne_se") return LossVariant::NeSe;
    if (name == "ne_lp") return LossVariant::NeLp;
    throw ConfigError("unknown loss variant '" + name + "'");
}

void LossConfig::validate() const {
    if (variant == LossVariant::Beta && !(beta > 0.0))
        throw ConfigError("beta variant requires beta > 0");
    if (variant == LossVariant::NeLp && !std::isfinite(cap_c) && cap_c > 0.0)
        throw ConfigError("ne_lp cap must be finite or -inf");
    if (anneal) {
        if (!(anneal->start_weight > 0.0) || anneal->start_weight > 1.0 ||
            !(anneal->end_weight > 0.0) || anneal->end_weight > 1.0)
            throw ConfigError("anneal weights must lie in (0, 1]");
        if (anneal->start_weight > anneal->end_weight)
            throw ConfigError("anneal weight must be nondecreasing");
    }
}

Tensor kl_diag_gauss_to_std(const Tensor& mu, const Tensor& log_var) {
    if (mu.shape() != log_var.shape())
        throw ShapeError("kl_diag_gauss_to_std: mu " + shape_str(mu.shape()) + " vs log_var " +
                         shape_str(log_var.shape()));
    // 0.5 * (mu^2 + exp(log_var) - 1 - log_var)
    return mul_scalar(add_scalar(sub(add(square(mu), exp(log_var)), log_var), -1.0), 0.5);
}

Tensor bernoulli_nll(const Tensor& logits, const Tensor& x) {
    if (logits.shape() != x.shape())
        throw ShapeError("bernoulli_nll: logits " + shape_str(logits.shape()) + " vs targets " +
                         shape_str(x.shape()));
    return sub(softplus(logits), mul(logits, x));
}

Tensor ne_se(const Tensor& z, const Tensor& z_hat) {
    if (z.shape() != z_hat.shape())
        throw ShapeError("ne_se: z " + shape_str(z.shape()) + " vs z_hat " +
                         shape_str(z_hat.shape()));
    return sum_axis(square(sub(z, z_hat)), 1);
}

Tensor ne_lp(const Tensor& z, const Tensor& mu_hat, const Tensor& log_var_hat, double c) {
    if (z.shape() != mu_hat.shape() || z.shape() != log_var_hat.shape())
        throw ShapeError("ne_lp: z " + shape_str(z.shape()) + " vs mu_hat " +
                         shape_str(mu_hat.shape()) + " vs log_var_hat " +
                         shape_str(log_var_hat.shape()));

    const Tensor lv = clamp_min(log_var_hat, std::log(kVarFloor));
    // nll_i = 0.5 log(2 pi) + 0.5 lv + (z - mu)^2 * exp(-lv) / 2
    const Tensor nll =
        add_scalar(add(mul_scalar(lv, 0.5),
                       mul_scalar(mul(square(sub(z, mu_hat)), exp(mul_scalar(lv, -1.0))), 0.5)),
                   kHalfLog2Pi);

    // A dim contributes only once its NLL reaches the cap. The mask is data,
    // not an op: no gradient flows through the comparison.
    std::vector<double> mask(nll.numel());
    auto nd = nll.data();
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = nd[i] >= c ? 1.0 : 0.0;
    return sum_axis(mul(nll, Tensor::from_data(nll.shape(), std::move(mask))), 1);
}

double anneal_weight(std::size_t epoch, const AnnealSchedule& schedule) {
    if (schedule.epochs == 0 || epoch >= schedule.epochs) return schedule.end_weight;
    const double t = static_cast<double>(epoch) / static_cast<double>(schedule.epochs);
    return schedule.start_weight + (schedule.end_weight - schedule.start_weight) * t;
}

double kl_weight_for_epoch(const LossConfig& config, std::size_t epoch) {
    const double ceiling = config.variant == LossVariant::Beta ? config.beta : 1.0;
    if (!config.anneal) return ceiling;
    return std::min(anneal_weight(epoch, *config.anneal), ceiling);
}

BatchLoss total_loss(const Tensor& x, const Model& model, const LossConfig& config,
                     double kl_weight, Rng& rng) {
    config.validate();
    BatchLoss out;
    out.code = encode(x, model.encoder, rng);
    out.recon = decode(out.code.z, model.decoder);

    const Tensor recon_nll = mean_axis(sum_axis(bernoulli_nll(out.recon.logits, x), 1), 0);
    const Tensor kl = mean_axis(sum_axis(kl_diag_gauss_to_std(out.code.mu, out.code.log_var), 1), 0);

    Tensor ne_term = Tensor::scalar(0.0);
    if (config.variant == LossVariant::NeSe || config.variant == LossVariant::NeLp) {
        out.recode = reencode(out.recon, model.encoder, rng, config.reencode_binarize);
        ne_term = config.variant == LossVariant::NeSe
                      ? mean_axis(ne_se(out.code.z, out.recode.z), 0)
                      : mean_axis(ne_lp(out.code.z, out.recode.mu, out.recode.log_var, config.cap_c), 0);
    }

    const Tensor total =
        add(add(recon_nll, mul_scalar(kl, kl_weight)), mul_scalar(ne_term, config.ne_weight));

    out.total = total;
    out.report.recon_nll = recon_nll.item();
    out.report.kl = kl.item();
    out.report.ne_term = ne_term.item();
    out.report.kl_weight_applied = kl_weight;
    out.report.total = total.item();
    return out;
}

}  // namespace nevae
