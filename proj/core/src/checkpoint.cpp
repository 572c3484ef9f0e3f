#include "nevae/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace nevae {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace {

void write_u32(std::ofstream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& is, const std::filesystem::path& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
        throw TruncatedFileError("checkpoint " + path.string() + " ends inside the header");
    return v;
}

void write_layer_spec(std::ofstream& os, const Mlp& net) {
    write_u32(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        write_u32(os, static_cast<std::uint32_t>(layer.weight.shape()[0]));
        write_u32(os, static_cast<std::uint32_t>(layer.weight.shape()[1]));
        write_u32(os, static_cast<std::uint32_t>(layer.act));
    }
}

Mlp read_layer_spec(std::ifstream& is, const std::filesystem::path& path) {
    const std::uint32_t count = read_u32(is, path);
    if (count > 64)
        throw IoError("checkpoint " + path.string() + ": implausible layer count " +
                      std::to_string(count));
    Mlp net;
    for (std::uint32_t l = 0; l < count; ++l) {
        const std::uint32_t in = read_u32(is, path);
        const std::uint32_t out = read_u32(is, path);
        const std::uint32_t act = read_u32(is, path);
        if (act > static_cast<std::uint32_t>(Activation::Relu))
            throw IoError("checkpoint " + path.string() + ": unknown activation tag " +
                          std::to_string(act));
        DenseLayer layer;
        layer.weight = Tensor::zeros({in, out});
        layer.bias = Tensor::zeros({out});
        layer.act = static_cast<Activation>(act);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void write_tensor(std::ofstream& os, const Tensor& t) {
    auto d = t.data();
    os.write(reinterpret_cast<const char*>(d.data()),
             static_cast<std::streamsize>(d.size() * sizeof(double)));
}

void read_tensor(std::ifstream& is, Tensor& t, const std::filesystem::path& path) {
    auto d = t.mutable_data();
    if (!is.read(reinterpret_cast<char*>(d.data()),
                 static_cast<std::streamsize>(d.size() * sizeof(double))))
        throw TruncatedFileError("checkpoint " + path.string() + " ends inside parameter data");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    write_u32(os, static_cast<std::uint32_t>(model.encoder.n_z));
    write_layer_spec(os, model.encoder.net);
    write_layer_spec(os, model.decoder.net);
    write_u32(os, static_cast<std::uint32_t>(model.decoder.head));
    for (const auto* t : model.encoder.net.params()) write_tensor(os, *t);
    for (const auto* t : model.decoder.net.params()) write_tensor(os, *t);
    if (!os) throw IoError("write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof magic))
        throw TruncatedFileError("checkpoint " + path.string() + " shorter than its magic");
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw BadMagicError("file " + path.string() + " is not a NEVAE001 checkpoint");

    Model model;
    const std::uint32_t n_z = read_u32(is, path);
    model.encoder.net = read_layer_spec(is, path);
    model.encoder.n_z = n_z;
    model.decoder.net = read_layer_spec(is, path);
    model.decoder.n_z = n_z;
    model.decoder.pixels = model.decoder.net.out_width();
    const std::uint32_t head = read_u32(is, path);
    if (head > static_cast<std::uint32_t>(DecoderHead::LinearMean))
        throw IoError("checkpoint " + path.string() + ": unknown decoder head " +
                      std::to_string(head));
    model.decoder.head = static_cast<DecoderHead>(head);
    for (auto* t : model.encoder.net.params()) read_tensor(is, *t, path);
    for (auto* t : model.decoder.net.params()) read_tensor(is, *t, path);
    return model;
}

}  // namespace nevae
