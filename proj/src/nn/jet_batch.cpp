#include "caml/nn/jet_batch.hpp"

#include "caml/error.hpp"

namespace caml::nn {

namespace {

constexpr Eigen::Index kChunkPoints = 256;

}  // namespace

// Kernels only ever see owned (aligned) storage: Eigen picks SIMD paths by
// address, so mapping the caller's vector would make rounding depend on where
// the heap happened to place it.
void BatchedJet::load_weights(std::span<const double> theta) {
  weights_.resize(blocks_.size());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const LayerBlock& b = blocks_[l];
    weights_[l] = Eigen::Map<const RowMajor>(theta.data() + b.weight_offset, b.fan_out, b.fan_in);
  }
}

JetChannels::JetChannels(int d, JetOrder o) : dim(d), order(o) {
  if (d < 1 || d > 3) throw ContractViolation("JetChannels: dimension must be in [1, 3]");
  if (o == JetOrder::kLaplacian) {
    for (int k = 0; k < d; ++k) hess_pairs.emplace_back(k, k);
  } else if (o == JetOrder::kFull) {
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) hess_pairs.emplace_back(i, j);
    }
  }
}

int JetChannels::hess(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (std::size_t h = 0; h < hess_pairs.size(); ++h) {
    if (hess_pairs[h] == std::pair{i, j}) return 1 + dim + static_cast<int>(h);
  }
  return -1;
}

BatchedJet::BatchedJet(const MlpSpec& spec, JetOrder order, Eigen::MatrixXd points)
    : spec_(spec),
      channels_(spec.input_dim, order),
      n_(points.cols()),
      points_(std::move(points)),
      blocks_(layer_layout(spec)) {
  if (points_.rows() != spec.input_dim) {
    throw ContractViolation("BatchedJet: point dimension does not match network input");
  }
  const Eigen::Index c = channels_.count();
  for (Eigen::Index p = 0; p < n_; p += kChunkPoints) {
    const Eigen::Index size = std::min(kChunkPoints, n_ - p);
    chunks_.push_back({p, size, c * p});
  }
  Eigen::MatrixXd input = Eigen::MatrixXd::Zero(spec.input_dim, c * n_);
  for (const Chunk& ch : chunks_) {
    input.middleCols(ch.column, ch.size) = points_.middleCols(ch.first_point, ch.size);
    if (order == JetOrder::kValue) continue;
    for (int k = 0; k < spec.input_dim; ++k) {
      input.row(k).segment(ch.column + channels_.grad(k) * ch.size, ch.size).setOnes();
    }
  }
  act_.push_back(std::move(input));
  for (const LayerBlock& b : blocks_) {
    pre_.emplace_back(b.fan_out, c * n_);
    act_.emplace_back(b.fan_out, c * n_);
  }
  for (std::size_t l = 0; l + 1 < blocks_.size(); ++l) slope_.emplace_back(blocks_[l].fan_out, n_);
  out_.resize(spec.output_dim, c * n_);
}

void BatchedJet::activate(std::size_t l, const Chunk& ch) {
  const Eigen::Index m = ch.size;
  const int d = channels_.dim;
  const auto& z = pre_[l];
  auto& a = act_[l + 1];
  const auto zv = z.middleCols(ch.column, m).array();
  auto t = a.middleCols(ch.column, m).array();
  auto s = slope_[l].middleCols(ch.first_point, m).array();
  // Eigen's double tanh is scalar; the exp form vectorizes and is accurate to ~1 ulp.
  s = (-2.0 * zv.abs()).exp();
  t = zv.sign() * (1.0 - s) / (1.0 + s);
  s = 1.0 - t.square();
  if (channels_.order == JetOrder::kValue) return;
  for (int k = 0; k < d; ++k) {
    const Eigen::Index off = ch.column + channels_.grad(k) * m;
    a.middleCols(off, m).array() = s * z.middleCols(off, m).array();
  }
  for (std::size_t h = 0; h < channels_.hess_pairs.size(); ++h) {
    const auto [i, j] = channels_.hess_pairs[h];
    const Eigen::Index off = ch.column + static_cast<Eigen::Index>(1 + d + h) * m;
    const auto zi = z.middleCols(ch.column + channels_.grad(i) * m, m).array();
    const auto zj = z.middleCols(ch.column + channels_.grad(j) * m, m).array();
    a.middleCols(off, m).array() = s * (z.middleCols(off, m).array() - 2.0 * t * zi * zj);
  }
}

void BatchedJet::forward(std::span<const double> theta) {
  if (theta.size() != spec_.num_params()) {
    throw ContractViolation("BatchedJet: parameter vector length does not match spec");
  }
  load_weights(theta);
  const Eigen::Index c = channels_.count();
  for (const Chunk& ch : chunks_) {
    const Eigen::Index cols = c * ch.size;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      const LayerBlock& b = blocks_[l];
      auto z = pre_[l].middleCols(ch.column, cols);
      z.noalias() = weights_[l] * act_[l].middleCols(ch.column, cols);
      const Eigen::Map<const Eigen::VectorXd> bias(theta.data() + b.bias_offset, b.fan_out);
      z.leftCols(ch.size).colwise() += bias;
      if (l + 1 < blocks_.size()) {
        activate(l, ch);
      } else {
        act_[l + 1].middleCols(ch.column, cols) = z;
      }
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      out_.middleCols(k * n_ + ch.first_point, ch.size) =
          act_.back().middleCols(ch.column + k * ch.size, ch.size);
    }
  }
}

void BatchedJet::pull_back(std::size_t l, const Chunk& ch, Eigen::Ref<Eigen::MatrixXd> z_bar,
                           const Eigen::Ref<const Eigen::MatrixXd>& a_bar) const {
  const Eigen::Index m = ch.size;
  const int d = channels_.dim;
  const auto& z = pre_[l];
  const auto t = act_[l + 1].middleCols(ch.column, m).array();
  const auto s = slope_[l].middleCols(ch.first_point, m).array();
  const auto s1 = -2.0 * t * s;  // ds/dz
  auto zv_bar = z_bar.leftCols(m).array();
  zv_bar = s * a_bar.leftCols(m).array();
  if (channels_.order == JetOrder::kValue) return;
  for (int k = 0; k < d; ++k) {
    const Eigen::Index off = channels_.grad(k) * m;
    const auto ag = a_bar.middleCols(off, m).array();
    z_bar.middleCols(off, m).array() = s * ag;
    zv_bar += s1 * ag * z.middleCols(ch.column + off, m).array();
  }
  const auto s2 = -2.0 * s.square() + 4.0 * t.square() * s;  // d²s/dz²
  for (std::size_t h = 0; h < channels_.hess_pairs.size(); ++h) {
    const auto [i, j] = channels_.hess_pairs[h];
    const Eigen::Index off = static_cast<Eigen::Index>(1 + d + h) * m;
    const Eigen::Index oi = channels_.grad(i) * m;
    const Eigen::Index oj = channels_.grad(j) * m;
    const auto ah = a_bar.middleCols(off, m).array();
    const auto zi = z.middleCols(ch.column + oi, m).array();
    const auto zj = z.middleCols(ch.column + oj, m).array();
    z_bar.middleCols(off, m).array() = s * ah;
    z_bar.middleCols(oi, m).array() += s1 * ah * zj;
    z_bar.middleCols(oj, m).array() += s1 * ah * zi;
    zv_bar += ah * (s2 * zi * zj + s1 * z.middleCols(ch.column + off, m).array());
  }
}

void BatchedJet::backward(std::span<const double> theta, const Eigen::MatrixXd& out_bar,
                          std::span<double> grad) {
  if (grad.size() != spec_.num_params() || theta.size() != spec_.num_params()) {
    throw ContractViolation("BatchedJet::backward: parameter length mismatch");
  }
  if (out_bar.rows() != out_.rows() || out_bar.cols() != out_.cols()) {
    throw ContractViolation("BatchedJet::backward: adjoint shape mismatch");
  }
  load_weights(theta);
  weight_grads_.resize(blocks_.size());
  bias_grads_.resize(blocks_.size());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    weight_grads_[l].setZero(blocks_[l].fan_out, blocks_[l].fan_in);
    bias_grads_[l].setZero(blocks_[l].fan_out);
  }
  const Eigen::Index c = channels_.count();
  for (const Chunk& ch : chunks_) {
    const Eigen::Index cols = c * ch.size;
    z_bar_.resize(spec_.output_dim, cols);
    for (Eigen::Index k = 0; k < c; ++k) {
      z_bar_.middleCols(k * ch.size, ch.size) = out_bar.middleCols(k * n_ + ch.first_point, ch.size);
    }
    for (std::size_t l = blocks_.size(); l-- > 0;) {
      const LayerBlock& b = blocks_[l];
      if (l + 1 < blocks_.size()) {
        z_bar_.resize(b.fan_out, cols);
        pull_back(l, ch, z_bar_, a_bar_);
      }
      weight_grads_[l].noalias() += z_bar_ * act_[l].middleCols(ch.column, cols).transpose();
      bias_grads_[l] += z_bar_.leftCols(ch.size).rowwise().sum();
      if (l > 0) a_bar_.noalias() = weights_[l].transpose() * z_bar_;
    }
  }
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const LayerBlock& b = blocks_[l];
    Eigen::Map<RowMajor>(grad.data() + b.weight_offset, b.fan_out, b.fan_in) += weight_grads_[l];
    Eigen::Map<Eigen::VectorXd>(grad.data() + b.bias_offset, b.fan_out) += bias_grads_[l];
  }
}

}  // namespace caml::nn
