#pragma once

#include <Eigen/Core>

#include <string>

#include "densefield/error.hpp"

namespace densefield::net {

namespace loss_detail {

inline void require_same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index cols, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch(std::string(what) + ": shapes differ");
  if (a.cols() != cols) {
    throw ShapeMismatch(std::string(what) + ": expected " + std::to_string(cols) + " columns");
  }
  if (a.rows() == 0) throw ShapeMismatch(std::string(what) + ": no points");
}

}  // namespace loss_detail

/// Mean squared error over all N x 4 entries.
inline double loss_landmark(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
  loss_detail::require_same(pred, gt, 4, "loss_landmark");
  return (pred - gt).array().square().mean();
}

inline Eigen::MatrixXd loss_landmark_gradient(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
  loss_detail::require_same(pred, gt, 4, "loss_landmark");
  return 2.0 * (pred - gt) / static_cast<double>(pred.size());
}

/// Mean over points and kinds of the L2 norm of each 3-vector difference.
/// Columns 3k..3k+2 hold kind k.
inline double loss_axis(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
  loss_detail::require_same(pred, gt, 12, "loss_axis");
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (int k = 0; k < 4; ++k) total += (pred.block<1, 3>(i, 3 * k) - gt.block<1, 3>(i, 3 * k)).norm();
  return total / static_cast<double>(4 * pred.rows());
}

/// d/dpred of loss_axis; zero where a difference vanishes (subgradient).
inline Eigen::MatrixXd loss_axis_gradient(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
  loss_detail::require_same(pred, gt, 12, "loss_axis");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  const double scale = 1.0 / static_cast<double>(4 * pred.rows());
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (int k = 0; k < 4; ++k) {
      const Eigen::RowVector3d d = pred.block<1, 3>(i, 3 * k) - gt.block<1, 3>(i, 3 * k);
      const double n = d.norm();
      if (n > 0.0) g.block<1, 3>(i, 3 * k) = scale * d / n;
    }
  }
  return g;
}

}  // namespace densefield::net
