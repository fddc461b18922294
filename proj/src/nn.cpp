#include "isacdt/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace isacdt {

Mlp::Mlp(std::vector<int> layer_sizes, Rng& rng, double output_gain) : sizes_(std::move(layer_sizes)) {
  layout();
  std::normal_distribution<double> n01(0.0, 1.0);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const bool last = l + 2 == sizes_.size();
    const double scale = (last ? output_gain : 1.0) / std::sqrt(static_cast<double>(sizes_[l]));
    const Eigen::Index n = static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
    for (Eigen::Index i = 0; i < n; ++i) params_[w_offset_[l] + i] = scale * n01(rng);
    params_.segment(b_offset_[l], sizes_[l + 1]).setZero();
  }
}

Mlp::Mlp(std::vector<int> layer_sizes, Eigen::VectorXd params) : sizes_(std::move(layer_sizes)) {
  layout();
  if (params.size() != params_.size()) throw std::invalid_argument("parameter count does not match layer sizes");
  params_ = std::move(params);
}

void Mlp::layout() {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  Eigen::Index offset = 0;
  w_offset_.clear();
  b_offset_.clear();
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
    b_offset_.push_back(offset);
    offset += sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(size_t l) const {
  return {params_.data() + w_offset_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(size_t l) const {
  return {params_.data() + b_offset_[l], sizes_[l + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache* cache) const {
  if (input.rows() != sizes_.front()) throw std::invalid_argument("MLP input has the wrong dimension");
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(input);
  }
  Eigen::MatrixXd a = input;
  const size_t layers = sizes_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 == layers) return z;
    a = z.array().tanh().matrix();
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd g = grad_output;
  for (size_t l = sizes_.size() - 1; l-- > 0;) {
    const Eigen::MatrixXd& a_in = cache.activations[l];
    Eigen::Map<Eigen::MatrixXd> dw(grad.data() + w_offset_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + b_offset_[l], sizes_[l + 1]);
    dw.noalias() += g * a_in.transpose();
    db += g.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = weight(l).transpose() * g;
    g = back.array() * (1.0 - a_in.array().square());
  }
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr_scale) {
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  const double step = lr * lr_scale / c1;
  params.array() -= step * m.array() / ((v.array() / c2).sqrt() + eps);
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace isacdt
