#pragma once

#include <cstdint>
#include <vector>

#include "nevae/rng.hpp"
#include "nevae/tensor.hpp"

namespace nevae {

enum class Activation : std::uint32_t { Identity = 0, Tanh = 1, Relu = 2 };

struct DenseLayer {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
    Activation act = Activation::Identity;
};

struct Mlp {
    std::vector<DenseLayer> layers;

    Tensor apply(const Tensor& x) const;
    std::size_t in_width() const;
    std::size_t out_width() const;
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
};

// Diagonal-Gaussian encoder: final layer emits [mu | log_var], each n_z wide.
struct EncoderParams {
    Mlp net;
    std::size_t n_z = 0;
};

// Bernoulli head squashes logits through a sigmoid; the linear head passes the
// network output through as the mean directly (diagnostic harnesses only).
enum class DecoderHead : std::uint32_t { BernoulliLogits = 0, LinearMean = 1 };

struct DecoderParams {
    Mlp net;
    std::size_t n_z = 0;
    std::size_t pixels = 0;
    DecoderHead head = DecoderHead::BernoulliLogits;
};

struct Model {
    EncoderParams encoder;
    DecoderParams decoder;

    std::vector<Tensor*> params();
    std::vector<Tensor*> encoder_tensors() { return encoder.net.params(); }
    std::vector<Tensor*> decoder_tensors() { return decoder.net.params(); }
};

// Per-sample latent parameters plus the reparameterized draw. The recorded
// noise satisfies z = mu + exp(0.5 * log_var) * eps exactly.
struct GaussianCode {
    Tensor mu;       // [batch, n_z]
    Tensor log_var;  // [batch, n_z]
    Tensor z;        // [batch, n_z]
    Tensor eps;      // [batch, n_z], untracked
    std::size_t n_z = 0;
};

struct Reconstruction {
    Tensor logits;  // [batch, pixels]
    Tensor probs;   // [batch, pixels]
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases.
Mlp make_mlp(const std::vector<std::size_t>& widths, Activation hidden_act, Rng& rng);

EncoderParams make_encoder(std::size_t pixels, const std::vector<std::size_t>& hidden,
                           std::size_t n_z, Rng& rng);
DecoderParams make_decoder(std::size_t n_z, const std::vector<std::size_t>& hidden,
                           std::size_t pixels, Rng& rng);
Model make_model(std::size_t pixels, const std::vector<std::size_t>& hidden, std::size_t n_z,
                 Rng& rng);

GaussianCode encode(const Tensor& x, const EncoderParams& params, Rng& rng);
Reconstruction decode(const Tensor& z, const DecoderParams& params);

// Feeds the decoder mean back through the encoder. With binarize_input the
// mean is thresholded at 0.5 first, which blocks gradient flow into the
// decoder (ablation path).
GaussianCode reencode(const Reconstruction& recon, const EncoderParams& params, Rng& rng,
                      bool binarize_input = false);

}  // namespace nevae
