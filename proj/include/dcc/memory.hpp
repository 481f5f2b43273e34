#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "dcc/matrix.hpp"
#include "dcc/rng.hpp"

namespace dcc {

enum class UpdatePolicy { All, Random, Hard };

inline const char* policy_name(UpdatePolicy p) {
  switch (p) {
    case UpdatePolicy::All: return "all";
    case UpdatePolicy::Random: return "random";
    case UpdatePolicy::Hard: return "hard";
  }
  return "?";
}

// Per-update instrumentation: the raw (pre-L2) class mean for centroid
// updates and the blended row before its renormalization. Tests use these
// to check the momentum algebra without re-deriving it.
struct MemoryUpdateTrace {
  struct Entry {
    std::size_t class_id = 0;
    std::size_t sample_index = std::numeric_limits<std::size_t>::max();
    std::vector<double> raw_mean;      // centroid updates only
    std::vector<double> pre_norm_row;  // omega*row + (1-omega)*evidence
  };
  std::vector<Entry> entries;
};

// Mean of the class members in this batch, L2-normalized.
inline std::vector<double> batch_class_mean(const Matrix& features,
                                            const std::vector<int>& labels,
                                            int class_id) {
  check(features.rows == labels.size(), ErrorCode::DimMismatch,
        "labels length != feature rows");
  std::vector<double> mean(features.cols, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != class_id) continue;
    const auto f = features.row(i);
    for (std::size_t k = 0; k < features.cols; ++k) mean[k] += f[k];
    ++count;
  }
  check(count > 0, ErrorCode::ClassAbsent,
        "class " + std::to_string(class_id) + " absent from batch");
  for (double& v : mean) v /= static_cast<double>(count);
  l2_normalize_in_place(mean);
  return mean;
}

// Dual cluster memory: an individual bank blended from single features and
// a centroid bank blended from per-class batch means. Rows are unit norm
// after initialization and after every update.
class DualMemory {
 public:
  DualMemory() = default;

  static DualMemory init(const Matrix& features, const std::vector<int>& labels,
                         std::size_t num_classes, double omega = 0.0,
                         UpdatePolicy policy = UpdatePolicy::All) {
    check(features.rows == labels.size(), ErrorCode::DimMismatch,
          "labels length != feature rows");
    check(omega >= 0.0 && omega <= 1.0, ErrorCode::InvalidArgument,
          "omega must lie in [0,1]");
    Matrix bank(num_classes, features.cols);
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int y = labels[i];
      check(y >= 0 && static_cast<std::size_t>(y) < num_classes,
            ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
      const auto f = features.row(i);
      auto r = bank.row(static_cast<std::size_t>(y));
      for (std::size_t k = 0; k < features.cols; ++k) r[k] += f[k];
      ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t j = 0; j < num_classes; ++j) {
      check(counts[j] > 0, ErrorCode::EmptyClass,
            "class " + std::to_string(j) + " has no samples");
      auto r = bank.row(j);
      for (double& v : r) v /= static_cast<double>(counts[j]);
      l2_normalize_in_place(r);
    }
    DualMemory mem;
    mem.individual_ = bank;
    mem.centroid_ = std::move(bank);
    mem.omega_ = omega;
    mem.policy_ = policy;
    return mem;
  }

  const Matrix& individual() const { return individual_; }
  const Matrix& centroid() const { return centroid_; }
  Matrix& mutable_individual() { return individual_; }
  Matrix& mutable_centroid() { return centroid_; }
  double omega() const { return omega_; }
  void set_omega(double omega) {
    check(omega >= 0.0 && omega <= 1.0, ErrorCode::InvalidArgument,
          "omega must lie in [0,1]");
    omega_ = omega;
  }
  UpdatePolicy policy() const { return policy_; }
  void set_policy(UpdatePolicy policy) { policy_ = policy; }
  std::size_t num_classes() const { return individual_.rows; }
  std::size_t feature_dim() const { return individual_.cols; }

  // Individual bank update. All: every sample in batch order. Random: one
  // uniformly drawn sample per class present (classes in ascending id order).
  // Hard: the sample least similar to the current row, ties to the lowest
  // sample index.
  void update_individual(const Matrix& features, const std::vector<int>& labels,
                         Rng& rng, MemoryUpdateTrace* trace = nullptr) {
    validate_batch(features, labels);
    if (policy_ == UpdatePolicy::All) {
      for (std::size_t i = 0; i < labels.size(); ++i)
        blend_individual(features, labels, i, trace);
      return;
    }
    for (int y : classes_present(labels)) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == y) members.push_back(i);
      std::size_t pick = members.front();
      if (policy_ == UpdatePolicy::Random) {
        pick = members[static_cast<std::size_t>(rng.uniform_int(members.size()))];
      } else {
        const auto row = individual_.row(static_cast<std::size_t>(y));
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i : members) {
          const double sim = dot(features.row(i), row);
          if (sim < best) {
            best = sim;
            pick = i;
          }
        }
      }
      blend_individual(features, labels, pick, trace);
    }
  }

  // Centroid bank update: exactly one blend per class present, using the
  // normalized batch class mean.
  void update_centroid(const Matrix& features, const std::vector<int>& labels,
                       MemoryUpdateTrace* trace = nullptr) {
    validate_batch(features, labels);
    for (int y : classes_present(labels)) {
      std::vector<double> raw(features.cols, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != y) continue;
        const auto f = features.row(i);
        for (std::size_t k = 0; k < features.cols; ++k) raw[k] += f[k];
        ++count;
      }
      for (double& v : raw) v /= static_cast<double>(count);
      std::vector<double> mean = raw;
      l2_normalize_in_place(mean);
      auto row = centroid_.row(static_cast<std::size_t>(y));
      for (std::size_t k = 0; k < row.size(); ++k)
        row[k] = omega_ * row[k] + (1.0 - omega_) * mean[k];
      if (trace) {
        MemoryUpdateTrace::Entry e;
        e.class_id = static_cast<std::size_t>(y);
        e.raw_mean = std::move(raw);
        e.pre_norm_row.assign(row.begin(), row.end());
        trace->entries.push_back(std::move(e));
      }
      l2_normalize_in_place(row);
    }
  }

  // p_ind = F (M^I)^T, p_cen = F (M^C)^T
  std::pair<Matrix, Matrix> predict(const Matrix& features) const {
    return {matmul_transpose(features, individual_),
            matmul_transpose(features, centroid_)};
  }

  bool operator==(const DualMemory& other) const {
    return individual_ == other.individual_ && centroid_ == other.centroid_ &&
           omega_ == other.omega_ && policy_ == other.policy_;
  }

 private:
  void validate_batch(const Matrix& features, const std::vector<int>& labels) const {
    check(features.rows == labels.size(), ErrorCode::DimMismatch,
          "labels length != feature rows");
    check(features.cols == feature_dim(), ErrorCode::DimMismatch,
          "feature dim != bank dim");
    for (int y : labels)
      check(y >= 0 && static_cast<std::size_t>(y) < num_classes(),
            ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
  }

  static std::vector<int> classes_present(const std::vector<int>& labels) {
    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
  }

  void blend_individual(const Matrix& features, const std::vector<int>& labels,
                        std::size_t i, MemoryUpdateTrace* trace) {
    const auto f = features.row(i);
    auto row = individual_.row(static_cast<std::size_t>(labels[i]));
    for (std::size_t k = 0; k < row.size(); ++k)
      row[k] = omega_ * row[k] + (1.0 - omega_) * f[k];
    if (trace) {
      MemoryUpdateTrace::Entry e;
      e.class_id = static_cast<std::size_t>(labels[i]);
      e.sample_index = i;
      e.pre_norm_row.assign(row.begin(), row.end());
      trace->entries.push_back(std::move(e));
    }
    l2_normalize_in_place(row);
  }

  Matrix individual_;
  Matrix centroid_;
  double omega_ = 0.0;
  UpdatePolicy policy_ = UpdatePolicy::All;
};

inline DualMemory init_memory(const Matrix& features, const std::vector<int>& labels,
                              std::size_t num_classes, double omega = 0.0,
                              UpdatePolicy policy = UpdatePolicy::All) {
  return DualMemory::init(features, labels, num_classes, omega, policy);
}

}  // namespace dcc
