#include "nevae/model.hpp"

#include <cmath>
#include <string>

namespace nevae {

Tensor Mlp::apply(const Tensor& x) const {
    if (x.rank() != 2 || x.shape()[1] != in_width())
        throw ShapeError("Mlp::apply: input " + shape_str(x.shape()) + " does not match width " +
                         std::to_string(in_width()));
    Tensor h = x;
    for (const auto& layer : layers) {
        h = add(matmul(h, layer.weight), layer.bias);
        switch (layer.act) {
            case Activation::Identity: break;
            case Activation::Tanh: h = tanh(h); break;
            case Activation::Relu: h = relu(h); break;
        }
    }
    return h;
}

std::size_t Mlp::in_width() const {
    return layers.empty() ? 0 : layers.front().weight.shape()[0];
}

std::size_t Mlp::out_width() const {
    return layers.empty() ? 0 : layers.back().weight.shape()[1];
}

std::vector<Tensor*> Mlp::params() {
    std::vector<Tensor*> ps;
    for (auto& layer : layers) {
        ps.push_back(&layer.weight);
        ps.push_back(&layer.bias);
    }
    return ps;
}

std::vector<const Tensor*> Mlp::params() const {
    std::vector<const Tensor*> ps;
    for (const auto& layer : layers) {
        ps.push_back(&layer.weight);
        ps.push_back(&layer.bias);
    }
    return ps;
}

std::vector<Tensor*> Model::params() {
    auto ps = encoder.net.params();
    auto ds = decoder.net.params();
    ps.insert(ps.end(), ds.begin(), ds.end());
    return ps;
}

Mlp make_mlp(const std::vector<std::size_t>& widths, Activation hidden_act, Rng& rng) {
    if (widths.size() < 2) throw ConfigError("make_mlp: need at least input and output widths");
    Mlp net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        DenseLayer layer;
        layer.weight =
            Tensor::from_data({fan_in, fan_out}, rng.uniform_vector(fan_in * fan_out, -bound, bound));
        layer.bias = Tensor::zeros({fan_out});
        layer.act = l + 2 < widths.size() ? hidden_act : Activation::Identity;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

EncoderParams make_encoder(std::size_t pixels, const std::vector<std::size_t>& hidden,
                           std::size_t n_z, Rng& rng) {
    std::vector<std::size_t> widths{pixels};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(2 * n_z);
    return EncoderParams{make_mlp(widths, Activation::Tanh, rng), n_z};
}

DecoderParams make_decoder(std::size_t n_z, const std::vector<std::size_t>& hidden,
                           std::size_t pixels, Rng& rng) {
    std::vector<std::size_t> widths{n_z};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(pixels);
    return DecoderParams{make_mlp(widths, Activation::Tanh, rng), n_z, pixels,
                         DecoderHead::BernoulliLogits};
}

Model make_model(std::size_t pixels, const std::vector<std::size_t>& hidden, std::size_t n_z,
                 Rng& rng) {
    Model m;
    m.encoder = make_encoder(pixels, hidden, n_z, rng);
    m.decoder = make_decoder(n_z, hidden, pixels, rng);
    return m;
}

GaussianCode encode(const Tensor& x, const EncoderParams& params, Rng& rng) {
    const std::size_t n_z = params.n_z;
    Tensor heads = params.net.apply(x);
    if (heads.shape()[1] != 2 * n_z)
        throw ShapeError("encode: head width " + std::to_string(heads.shape()[1]) +
                         " != 2 * n_z = " + std::to_string(2 * n_z));
    GaussianCode code;
    code.n_z = n_z;
    code.mu = slice(heads, 1, 0, n_z);
    code.log_var = slice(heads, 1, n_z, n_z);
    const std::size_t batch = x.shape()[0];
    code.eps = Tensor::from_data({batch, n_z}, rng.normal_vector(batch * n_z));
    code.z = add(code.mu, mul(exp(mul_scalar(code.log_var, 0.5)), code.eps));
    return code;
}

Reconstruction decode(const Tensor& z, const DecoderParams& params) {
    if (z.rank() != 2 || z.shape()[1] != params.n_z)
        throw ShapeError("decode: code " + shape_str(z.shape()) + " does not match n_z = " +
                         std::to_string(params.n_z));
    Reconstruction recon;
    recon.logits = params.net.apply(z);
    recon.probs =
        params.head == DecoderHead::BernoulliLogits ? sigmoid(recon.logits) : recon.logits;
    return recon;
}

GaussianCode reencode(const Reconstruction& recon, const EncoderParams& params, Rng& rng,
                      bool binarize_input) {
    Tensor input = recon.probs;
    if (binarize_input) {
        std::vector<double> hard(recon.probs.numel());
        auto src = recon.probs.data();
        for (std::size_t i = 0; i < hard.size(); ++i) hard[i] = src[i] >= 0.5 ? 1.0 : 0.0;
        input = Tensor::from_data(recon.probs.shape(), std::move(hard));
    }
    return encode(input, params, rng);
}

}  // namespace nevae
