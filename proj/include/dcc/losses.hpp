#pragma once

#include <cmath>
#include <vector>

#include "dcc/matrix.hpp"
#include "dcc/memory.hpp"

namespace dcc {

struct LossBreakdown {
  double icc = 0.0;
  double ccc = 0.0;
  double con = 0.0;
  double total = 0.0;
};

struct ContrastiveResult {
  double loss = 0.0;
  Matrix grad;  // w.r.t. features; the bank receives no gradient
};

// Mean over the batch of -log softmax_j(f . M_j / tau) at j = y.
// grad[i] = (softmax(p_i / tau) - onehot(y_i)) . bank / (tau * batch).
inline ContrastiveResult contrastive_loss(const Matrix& features,
                                          const Matrix& bank,
                                          const std::vector<int>& labels,
                                          double tau) {
  check(tau > 0.0, ErrorCode::NonPositiveTau, "tau must be positive");
  check(features.rows == labels.size(), ErrorCode::DimMismatch,
        "labels length != feature rows");
  const std::size_t batch = features.rows;
  const std::size_t num_classes = bank.rows;
  for (int y : labels)
    check(y >= 0 && static_cast<std::size_t>(y) < num_classes,
          ErrorCode::LabelOutOfRange, "label " + std::to_string(y));

  const Matrix logits = matmul_transpose(features, bank);
  ContrastiveResult result;
  result.grad = Matrix(features.rows, features.cols);
  const double inv_tau = 1.0 / tau;
  double loss_sum = 0.0;
  std::vector<double> prob(num_classes);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto row = logits.row(i);
    double max_logit = row[0] * inv_tau;
    for (std::size_t j = 1; j < num_classes; ++j)
      max_logit = std::max(max_logit, row[j] * inv_tau);
    double denom = 0.0;
    for (std::size_t j = 0; j < num_classes; ++j) {
      prob[j] = std::exp(row[j] * inv_tau - max_logit);
      denom += prob[j];
    }
    const double log_denom = std::log(denom);
    const auto y = static_cast<std::size_t>(labels[i]);
    loss_sum += log_denom - (row[y] * inv_tau - max_logit);

    const double scale = inv_tau / static_cast<double>(batch);
    auto g = result.grad.row(i);
    for (std::size_t j = 0; j < num_classes; ++j) {
      double coeff = prob[j] / denom;
      if (j == y) coeff -= 1.0;
      coeff *= scale;
      const auto m = bank.row(j);
      for (std::size_t k = 0; k < features.cols; ++k) g[k] += coeff * m[k];
    }
  }
  result.loss = loss_sum / static_cast<double>(batch);
  return result;
}

struct ConsistencyResult {
  double loss = 0.0;
  Matrix grad_ind;
  Matrix grad_cen;
};

// Smooth-L1 distance between the two prediction matrices, threshold 1,
// averaged over batch x classes. Gradients flow into both inputs.
inline ConsistencyResult consistency_loss(const Matrix& p_ind, const Matrix& p_cen) {
  check(p_ind.same_shape(p_cen), ErrorCode::DimMismatch,
        "prediction shapes differ");
  ConsistencyResult result;
  result.grad_ind = Matrix(p_ind.rows, p_ind.cols);
  result.grad_cen = Matrix(p_ind.rows, p_ind.cols);
  const double inv_count = 1.0 / static_cast<double>(p_ind.data.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p_ind.data.size(); ++i) {
    const double d = p_ind.data[i] - p_cen.data[i];
    const double a = std::abs(d);
    double slope;
    if (a < 1.0) {
      sum += 0.5 * d * d;
      slope = d;
    } else {
      sum += a - 0.5;
      slope = d > 0.0 ? 1.0 : -1.0;
    }
    result.grad_ind.data[i] = slope * inv_count;
    result.grad_cen.data[i] = -slope * inv_count;
  }
  result.loss = sum * inv_count;
  return result;
}

struct DccLossResult {
  LossBreakdown breakdown;
  Matrix grad;  // w.r.t. features
};

// Combined objective: per-bank contrastive losses plus the weighted
// consistency term. Banks are constants; only features get gradients.
inline DccLossResult dcc_loss(const Matrix& features, const DualMemory& mem,
                              const std::vector<int>& labels, double tau,
                              double lambda) {
  check(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be >= 0");
  ContrastiveResult icc = contrastive_loss(features, mem.individual(), labels, tau);
  ContrastiveResult ccc = contrastive_loss(features, mem.centroid(), labels, tau);
  auto [p_ind, p_cen] = mem.predict(features);
  ConsistencyResult con = consistency_loss(p_ind, p_cen);

  DccLossResult result;
  result.breakdown.icc = icc.loss;
  result.breakdown.ccc = ccc.loss;
  result.breakdown.con = con.loss;
  result.breakdown.total = ccc.loss + icc.loss + lambda * con.loss;

  result.grad = std::move(icc.grad);
  for (std::size_t i = 0; i < result.grad.data.size(); ++i)
    result.grad.data[i] += ccc.grad.data[i];
  if (lambda > 0.0) {
    // p = f M^T, so dL/df += dL/dp . M for each prediction path
    const Matrix& mi = mem.individual();
    const Matrix& mc = mem.centroid();
    for (std::size_t i = 0; i < features.rows; ++i) {
      auto g = result.grad.row(i);
      const auto gi = con.grad_ind.row(i);
      const auto gc = con.grad_cen.row(i);
      for (std::size_t j = 0; j < mi.rows; ++j) {
        const double wi = lambda * gi[j];
        const double wc = lambda * gc[j];
        const auto ri = mi.row(j);
        const auto rc = mc.row(j);
        for (std::size_t k = 0; k < features.cols; ++k)
          g[k] += wi * ri[k] + wc * rc[k];
      }
    }
  }
  return result;
}

}  // namespace dcc
