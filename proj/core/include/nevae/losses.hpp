#pragma once

#include <optional>
#include <string>

#include "nevae/model.hpp"
#include "nevae/tensor.hpp"

namespace nevae {

enum class LossVariant { Vanilla, Beta, NeSe, NeLp };

std::string variant_name(LossVariant v);
LossVariant variant_from_name(const std::string& name);

struct AnnealSchedule {
    double start_weight = 0.1;
    double end_weight = 1.0;
    std::size_t epochs = 10;
};

struct LossConfig {
    LossVariant variant = LossVariant::Vanilla;
    double beta = 1.0;              // KL weight ceiling for the beta variant
    double cap_c = 0.0;             // per-dim capping threshold for ne_lp
    double ne_weight = 1.0;         // multiplier on the re-encoding term
    std::optional<AnnealSchedule> anneal;
    bool reencode_binarize = false; // threshold the decoder mean before re-encoding

    void validate() const;
};

// Per-batch decomposition. Sums run over dims/pixels per sample, means over
// the batch; total = recon_nll + kl_weight_applied * kl + ne_weight * ne_term.
struct LossReport {
    double recon_nll = 0.0;
    double kl = 0.0;
    double ne_term = 0.0;
    double kl_weight_applied = 1.0;
    double total = 0.0;
};

// Everything total_loss produced, with the scalar total still on the tape.
struct BatchLoss {
    Tensor total;
    LossReport report;
    GaussianCode code;
    Reconstruction recon;
    GaussianCode recode;  // undefined tensors unless an ne variant ran
};

// Elementwise 0.5 * (mu^2 + sigma^2 - 1 - log sigma^2) against N(0, I).
Tensor kl_diag_gauss_to_std(const Tensor& mu, const Tensor& log_var);

// Stable -[x log s(l) + (1 - x) log(1 - s(l))] == softplus(l) - l * x.
Tensor bernoulli_nll(const Tensor& logits, const Tensor& x);

// Row sums of (z - z_hat)^2; shape [batch].
Tensor ne_se(const Tensor& z, const Tensor& z_hat);

// Per-dim Gaussian NLL of z under N(mu_hat, sigma_hat^2), each dim contributing
// only when its NLL reaches the cap c; row sums, shape [batch]. sigma_hat^2 is
// floored at 1e-8.
Tensor ne_lp(const Tensor& z, const Tensor& mu_hat, const Tensor& log_var_hat, double c);

// Linear ramp start_weight -> end_weight over the first `epochs` epochs.
double anneal_weight(std::size_t epoch, const AnnealSchedule& schedule);

// Effective KL weight for an epoch: the anneal ramp, clipped at beta for the
// beta variant (annealing stops once it reaches beta).
double kl_weight_for_epoch(const LossConfig& config, std::size_t epoch);

BatchLoss total_loss(const Tensor& x, const Model& model, const LossConfig& config,
                     double kl_weight, Rng& rng);

}  // namespace nevae
