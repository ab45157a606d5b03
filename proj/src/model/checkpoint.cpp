#include "burgan/model/checkpoint.hpp"

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"

#include <array>

namespace burgan {

namespace {

constexpr std::uint32_t kNetworkCount = 4;

std::array<const ad::Mlp*, 4> networks(const ModelParams& p) {
  return {&p.encoder, &p.approximator, &p.reconstructor, &p.discriminator};
}

std::array<ad::Mlp*, 4> networks(ModelParams& p) {
  return {&p.encoder, &p.approximator, &p.reconstructor, &p.discriminator};
}

constexpr std::array<const char*, 4> kNetworkNames{"encoder", "approximator", "reconstructor", "discriminator"};

std::uint32_t activation_code(ad::Activation a) { return static_cast<std::uint32_t>(a); }

ad::Activation activation_from(std::uint32_t code, const std::string& source) {
  if (code > static_cast<std::uint32_t>(ad::Activation::identity)) {
    throw IoError(source + ": unknown activation code " + std::to_string(code));
  }
  return static_cast<ad::Activation>(code);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.validate();
  BinaryWriter w;
  w.magic("BRGC");
  w.u32(kCheckpointVersion);
  w.u64(ckpt.params.z_dim);
  w.u32(kNetworkCount);
  for (const ad::Mlp* net : networks(ckpt.params)) {
    w.u32(static_cast<std::uint32_t>(net->layers.size()));
    for (const ad::Layer& l : net->layers) {
      w.u64(static_cast<std::uint64_t>(l.weight.cols()));
      w.u64(static_cast<std::uint64_t>(l.weight.rows()));
      w.u32(activation_code(l.activation));
    }
  }
  for (const ad::Mlp* net : networks(ckpt.params)) {
    for (const ad::Layer& l : net->layers) {
      w.f64s({l.weight.data(), static_cast<std::size_t>(l.weight.size())});
      w.f64s({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
    }
  }
  w.u32(static_cast<std::uint32_t>(ckpt.sections.size()));
  for (const auto& [tag, body] : ckpt.sections) {
    if (tag.size() != 4) throw ConfigError("checkpoint section tag must be 4 characters: '" + tag + "'");
    w.bytes(tag);
    w.u64(body.size());
    w.bytes(body);
  }
  return w.buffer();
}

Checkpoint parse_checkpoint(std::string data, const std::string& source) {
  BinaryReader r(std::move(data), source);
  r.expect_magic("BRGC");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError(source + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t z_dim = r.u64();
  if (z_dim < 1 || z_dim > 4096) throw IoError(source + ": implausible z_dim " + std::to_string(z_dim));
  if (r.u32() != kNetworkCount) throw IoError(source + ": expected 4 networks");

  Checkpoint ckpt;
  ckpt.params = ModelParams::zeros(static_cast<std::size_t>(z_dim));
  auto nets = networks(ckpt.params);
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const std::vector<ad::LayerSpec> expected = nets[k]->specs();
    const std::uint32_t count = r.u32();
    std::vector<ad::LayerSpec> stored;
    for (std::uint32_t l = 0; l < count && l < 1024; ++l) {
      ad::LayerSpec s;
      s.in_dim = static_cast<std::size_t>(r.u64());
      s.out_dim = static_cast<std::size_t>(r.u64());
      s.activation = activation_from(r.u32(), source);
      stored.push_back(s);
    }
    if (stored != expected) {
      throw ConfigError(source + ": " + kNetworkNames[k] + " layout does not match the architecture for z_dim=" +
                        std::to_string(z_dim));
    }
  }
  for (ad::Mlp* net : nets) {
    for (ad::Layer& l : net->layers) {
      r.f64s({l.weight.data(), static_cast<std::size_t>(l.weight.size())});
      r.f64s({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
      ad::require_finite(l.weight, source + " weights");
      ad::require_finite(l.bias, source + " biases");
    }
  }
  const std::uint32_t sections = r.u32();
  for (std::uint32_t s = 0; s < sections; ++s) {
    std::string tag = r.bytes(4);
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) throw IoError(source + ": truncated section " + tag);
    ckpt.sections[tag] = r.bytes(static_cast<std::size_t>(len));
  }
  if (!r.at_end()) throw IoError(source + ": trailing bytes after checkpoint");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path), path.string()); }

}  // namespace burgan
