#include "caml/nn/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "caml/error.hpp"

namespace caml::nn {

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1 || hidden_layers < 1 || hidden_width < 1) {
    throw ContractViolation("MlpSpec: all dimensions must be positive");
  }
}

std::vector<int> MlpSpec::widths() const {
  validate();
  std::vector<int> w{input_dim};
  for (int l = 0; l < hidden_layers; ++l) w.push_back(hidden_width);
  w.push_back(output_dim);
  return w;
}

std::vector<LayerBlock> layer_layout(const MlpSpec& spec) {
  const std::vector<int> w = spec.widths();
  std::vector<LayerBlock> out;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    LayerBlock b;
    b.fan_in = w[l];
    b.fan_out = w[l + 1];
    b.weight_offset = offset;
    offset += static_cast<std::size_t>(b.fan_in) * b.fan_out;
    b.bias_offset = offset;
    offset += b.fan_out;
    out.push_back(b);
  }
  return out;
}

std::size_t MlpSpec::num_params() const {
  const auto blocks = layer_layout(*this);
  return blocks.back().bias_offset + blocks.back().fan_out;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  ParamVector theta(spec.num_params(), 0.0);
  std::mt19937_64 rng(seed);
  for (const LayerBlock& b : layer_layout(spec)) {
    const double bound = std::sqrt(6.0 / (b.fan_in + b.fan_out));
    const std::size_t n = static_cast<std::size_t>(b.fan_in) * b.fan_out;
    for (std::size_t k = 0; k < n; ++k) {
      // 53-bit uniform in [0,1); avoids implementation-defined distribution output.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      theta[b.weight_offset + k] = bound * (2.0 * u - 1.0);
    }
  }
  return theta;
}

namespace {

void check_theta(std::span<const double> theta, const MlpSpec& spec) {
  if (theta.size() != spec.num_params()) {
    throw ContractViolation("parameter vector length does not match network spec");
  }
}

}  // namespace

std::vector<ad::DualTaylor> forward(std::span<const double> theta, const MlpSpec& spec,
                                    std::span<const ad::DualTaylor> x) {
  check_theta(theta, spec);
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw ContractViolation("forward: input length does not match spec");
  }
  const int dim = x.front().dim();
  std::vector<ad::DualTaylor> act(x.begin(), x.end());
  const auto blocks = layer_layout(spec);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const LayerBlock& b = blocks[l];
    std::vector<ad::DualTaylor> next;
    next.reserve(b.fan_out);
    for (int o = 0; o < b.fan_out; ++o) {
      ad::DualTaylor z(dim, theta[b.bias_offset + o]);
      for (int i = 0; i < b.fan_in; ++i) {
        z.add_scaled(act[i], theta[b.weight_offset + static_cast<std::size_t>(o) * b.fan_in + i]);
      }
      next.push_back(l + 1 < blocks.size() ? ad::tanh(z) : z);
    }
    act = std::move(next);
  }
  return act;
}

std::vector<double> forward_plain(std::span<const double> theta, const MlpSpec& spec,
                                  std::span<const double> x) {
  check_theta(theta, spec);
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw ContractViolation("forward_plain: input length does not match spec");
  }
  std::vector<double> act(x.begin(), x.end());
  const auto blocks = layer_layout(spec);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const LayerBlock& b = blocks[l];
    std::vector<double> next(b.fan_out);
    for (int o = 0; o < b.fan_out; ++o) {
      double z = theta[b.bias_offset + o];
      for (int i = 0; i < b.fan_in; ++i) {
        z += act[i] * theta[b.weight_offset + static_cast<std::size_t>(o) * b.fan_in + i];
      }
      next[o] = l + 1 < blocks.size() ? std::tanh(z) : z;
    }
    act = std::move(next);
  }
  return act;
}

std::vector<ad::TVar> forward_tape(ad::ParamTape& tape, std::span<const ad::TVar> params,
                                   const MlpSpec& spec, std::span<const double> x) {
  if (params.size() != spec.num_params()) {
    throw ContractViolation("forward_tape: parameter leaves do not match spec");
  }
  std::vector<ad::TVar> act;
  for (int k = 0; k < spec.input_dim; ++k) act.push_back(tape.input(k, x[k]));
  const auto blocks = layer_layout(spec);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const LayerBlock& b = blocks[l];
    std::vector<ad::TVar> next;
    for (int o = 0; o < b.fan_out; ++o) {
      ad::TVar z = params[b.bias_offset + o];
      for (int i = 0; i < b.fan_in; ++i) {
        z = z + params[b.weight_offset + static_cast<std::size_t>(o) * b.fan_in + i] * act[i];
      }
      next.push_back(l + 1 < blocks.size() ? ad::tanh(z) : z);
    }
    act = std::move(next);
  }
  return act;
}

namespace {

constexpr const char* kMagic = "CAMLCKPT";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MlpSpec& spec,
                     std::span<const double> theta) {
  check_theta(theta, spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  out << kMagic << " v1 input_dim=" << spec.input_dim << " output_dim=" << spec.output_dim
      << " hidden_layers=" << spec.hidden_layers << " hidden_width=" << spec.hidden_width
      << " activation=tanh count=" << theta.size() << '\n';
  for (double v : theta) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != kMagic || version != "v1") throw Error("not a checkpoint file: " + path.string());
  Checkpoint ck;
  std::size_t count = 0;
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw Error("malformed checkpoint header field: " + field);
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "input_dim") ck.spec.input_dim = std::stoi(val);
    else if (key == "output_dim") ck.spec.output_dim = std::stoi(val);
    else if (key == "hidden_layers") ck.spec.hidden_layers = std::stoi(val);
    else if (key == "hidden_width") ck.spec.hidden_width = std::stoi(val);
    else if (key == "activation" && val != "tanh") throw Error("unsupported activation " + val);
    else if (key == "count") count = std::stoull(val);
  }
  if (count != ck.spec.num_params()) throw Error("checkpoint count does not match its spec");
  ck.theta.resize(count);
  for (double& v : ck.theta) {
    char bytes[8];
    in.read(bytes, 8);
    if (!in) throw Error("truncated checkpoint payload");
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  return ck;
}

}  // namespace caml::nn
