#pragma once

#include <Eigen/Dense>
#include <vector>

#include "isacdt/config.hpp"

namespace isacdt {

/// Fully connected network with tanh hidden layers and a linear output.
/// Samples are columns; all weights and biases live in one flat vector.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // [0] = input, then each hidden layer
  };

  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Rng& rng, double output_gain);
  /// Rebuilds a network from stored sizes and parameters.
  Mlp(std::vector<int> layer_sizes, Eigen::VectorXd params);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr) const;
  /// Adds dL/dparams to `grad` given dL/doutput for the cached forward pass.
  void backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Eigen::VectorXd& grad) const;

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

 private:
  void layout();
  Eigen::Map<const Eigen::MatrixXd> weight(size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(size_t layer) const;

  std::vector<int> sizes_;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> w_offset_;
  std::vector<Eigen::Index> b_offset_;
};

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr_scale = 1.0);
};

/// Rescales `grad` in place so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace isacdt
