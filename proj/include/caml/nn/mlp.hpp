#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "caml/ad/dual_taylor.hpp"
#include "caml/ad/param_tape.hpp"

namespace caml::nn {

enum class Activation { kTanh };

struct MlpSpec {
  int input_dim = 2;
  int output_dim = 1;
  int hidden_layers = 4;
  int hidden_width = 64;
  Activation activation = Activation::kTanh;

  /// Throws ContractViolation unless every count is positive.
  void validate() const;
  std::size_t num_params() const;
  /// Layer widths from input to output, e.g. {2, 64, 64, 64, 64, 1}.
  std::vector<int> widths() const;
};

/// Where layer l's weights (row-major, fan_out x fan_in) and biases live in θ.
struct LayerBlock {
  int fan_in = 0;
  int fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerBlock> layer_layout(const MlpSpec& spec);

using ParamVector = std::vector<double>;

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

std::vector<ad::DualTaylor> forward(std::span<const double> theta, const MlpSpec& spec,
                                    std::span<const ad::DualTaylor> x);

std::vector<double> forward_plain(std::span<const double> theta, const MlpSpec& spec,
                                  std::span<const double> x);

/// Same network recorded on a parameter tape; `params` are the tape's θ leaves.
std::vector<ad::TVar> forward_tape(ad::ParamTape& tape, std::span<const ad::TVar> params,
                                   const MlpSpec& spec, std::span<const double> x);

void save_checkpoint(const std::filesystem::path& path, const MlpSpec& spec,
                     std::span<const double> theta);

struct Checkpoint {
  MlpSpec spec;
  ParamVector theta;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace caml::nn
