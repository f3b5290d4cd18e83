#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "densefield/error.hpp"
#include "densefield/network/weights.hpp"

namespace densefield::net {

/// Row-wise affine map: X (M x in) * W (in x out) + b.
inline Eigen::MatrixXd linear(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, const Eigen::MatrixXd& b) {
  if (x.cols() != w.rows()) {
    throw ShapeMismatch("linear: input has " + std::to_string(x.cols()) + " channels, weight expects " +
                        std::to_string(w.rows()));
  }
  if (b.rows() != 1 || b.cols() != w.cols()) throw ShapeMismatch("linear: bias shape mismatch");
  Eigen::MatrixXd y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

inline Eigen::MatrixXd linear(const Eigen::MatrixXd& x, const NetworkWeights& w, const std::string& prefix) {
  return linear(x, w.at(prefix + ".weight"), w.at(prefix + ".bias"));
}

/// Per-channel normalization. Instance mode uses the mean and (biased)
/// variance over the rows of `x`; running mode uses the stored estimates.
inline Eigen::MatrixXd normalize(const Eigen::MatrixXd& x, const NetworkWeights& w, const std::string& prefix,
                                 double eps) {
  const Eigen::MatrixXd& gamma = w.at(prefix + ".gamma");
  const Eigen::MatrixXd& beta = w.at(prefix + ".beta");
  if (gamma.cols() != x.cols()) throw ShapeMismatch("norm '" + prefix + "': channel mismatch");
  Eigen::RowVectorXd mean, var;
  if (w.norm_mode() == NormMode::running) {
    mean = w.at(prefix + ".running_mean").row(0);
    var = w.at(prefix + ".running_var").row(0);
  } else {
    if (x.rows() == 0) throw ShapeMismatch("norm '" + prefix + "': no rows");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
  }
  const Eigen::RowVectorXd inv = (var.array() + eps).rsqrt().matrix();
  Eigen::MatrixXd y = x.rowwise() - mean;
  y.array().rowwise() *= (inv.array() * gamma.row(0).array());
  y.rowwise() += beta.row(0);
  return y;
}

inline Eigen::MatrixXd relu(Eigen::MatrixXd x) { return x.cwiseMax(0.0); }

/// Linear, normalization, ReLU.
inline Eigen::MatrixXd lbr(const Eigen::MatrixXd& x, const NetworkWeights& w, const std::string& prefix, double eps) {
  return relu(normalize(linear(x, w, prefix), w, prefix, eps));
}

/// Softmax along each row, shifted by the row maximum so large logits stay
/// finite.
inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Largest |row sum - 1| of a weight matrix.
inline double row_sum_deviation(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace densefield::net
