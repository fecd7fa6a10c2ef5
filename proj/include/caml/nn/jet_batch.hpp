#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "caml/nn/mlp.hpp"

namespace caml::nn {

/// How many spatial derivative channels a batched pass carries.
enum class JetOrder {
  kValue,      // u
  kGradient,   // u, ∂u/∂x_k
  kLaplacian,  // u, ∂u/∂x_k, ∂²u/∂x_k²
  kFull,       // u, ∂u/∂x_k, all ∂²u/∂x_i∂x_j (i ≤ j)
};

/// Channel bookkeeping: channel 0 is the value, 1..d the gradient, then one
/// channel per carried second-derivative pair.
struct JetChannels {
  int dim = 0;
  JetOrder order = JetOrder::kValue;
  std::vector<std::pair<int, int>> hess_pairs;

  JetChannels(int dim, JetOrder order);
  int count() const { return 1 + (order == JetOrder::kValue ? 0 : dim) + static_cast<int>(hess_pairs.size()); }
  int grad(int k) const { return 1 + k; }
  /// Channel of ∂²/∂x_i∂x_j, or -1 when this order does not carry it.
  int hess(int i, int j) const;
};

/// Forward Taylor-mode evaluation of an MLP over a fixed point set, with a
/// hand-derived reverse pass back to θ.
///
/// Outputs and adjoints use a channel-major layout: output_matrix() is
/// (output_dim x channels*N) and column c*N + i holds channel c of point i.
/// Internally points are processed in cache-sized chunks so that each layer
/// of a chunk is one small GEMM followed by in-cache elementwise work.
class BatchedJet {
 public:
  /// `points` is d x N, one column per point.
  BatchedJet(const MlpSpec& spec, JetOrder order, Eigen::MatrixXd points);

  const JetChannels& channels() const { return channels_; }
  int num_points() const { return static_cast<int>(n_); }
  const Eigen::MatrixXd& points() const { return points_; }

  void forward(std::span<const double> theta);

  /// Output field f, channel c, all points.
  auto output(int field, int channel) const {
    return out_.row(field).segment(static_cast<Eigen::Index>(channel) * n_, n_);
  }
  const Eigen::MatrixXd& output_matrix() const { return out_; }

  /// Adds d(Σ out_bar ∘ output)/dθ into `grad`. `out_bar` has the shape of output_matrix().
  void backward(std::span<const double> theta, const Eigen::MatrixXd& out_bar,
                std::span<double> grad);

 private:
  struct Chunk {
    Eigen::Index first_point;
    Eigen::Index size;
    Eigen::Index column;  // first internal column
  };

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  void load_weights(std::span<const double> theta);
  void activate(std::size_t layer, const Chunk& ch);
  void pull_back(std::size_t layer, const Chunk& ch, Eigen::Ref<Eigen::MatrixXd> z_bar,
                 const Eigen::Ref<const Eigen::MatrixXd>& a_bar) const;

  MlpSpec spec_;
  JetChannels channels_;
  Eigen::Index n_;
  Eigen::MatrixXd points_;
  std::vector<LayerBlock> blocks_;
  std::vector<Chunk> chunks_;
  std::vector<Eigen::MatrixXd> pre_;  // Z per layer, chunked layout
  std::vector<Eigen::MatrixXd> act_;  // A per layer, act_[0] is the input jet
  std::vector<Eigen::MatrixXd> slope_;  // 1 - tanh² per hidden layer (width x N, chunked)
  Eigen::MatrixXd out_;
  Eigen::MatrixXd z_bar_;
  Eigen::MatrixXd a_bar_;
  std::vector<RowMajor> weights_;
  std::vector<RowMajor> weight_grads_;
  std::vector<Eigen::VectorXd> bias_grads_;
};

}  // namespace caml::nn
