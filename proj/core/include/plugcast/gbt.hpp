#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plugcast/matrix.hpp"

namespace plugcast {

// Second-order gradient boosting with exact greedy splits. Everything is
// deterministic: features are scanned in index order, candidate
// thresholds are midpoints between consecutive distinct sorted values,
// and a split must strictly beat the incumbent to replace it, so equal
// gains resolve to the lowest feature and threshold.
struct BoostConfig {
  int rounds = 100;
  int max_depth = 6;
  double learning_rate = 0.1;
  // Minimum sum of sample weights on each side of a split. With unit
  // weights this is a plain row-count threshold; duplicating a sample
  // while halving its weight leaves training unchanged.
  double min_samples_leaf = 5.0;
  double l2_leaf = 1.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool is_leaf() const { return feature < 0; }
};

// One tree on externally supplied gradients/hessians; leaf values are
// -G/(H+l2), split gain the standard second-order improvement.
TreeNode fit_tree(const Matrix& x, std::span<const double> grad,
                  std::span<const double> hess, std::span<const double> weight,
                  const BoostConfig& config);

double predict_tree(const TreeNode& node, std::span<const double> row);

class BoostedModel {
 public:
  enum class Kind { regressor, classifier };

  Kind kind() const { return kind_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return base_.size(); }
  std::size_t n_rounds() const { return rounds_.size(); }

  // Regression values (regressors only).
  std::vector<double> predict(const Matrix& x) const;
  // Single-row variants used by recursive forecasting loops.
  double predict_one(std::span<const double> row) const;
  int predict_class_one(std::span<const double> row) const;
  // Raw additive scores per class (classifiers only), rows x classes.
  Matrix predict_scores(const Matrix& x) const;
  // Softmax of the scores.
  Matrix predict_proba(const Matrix& x) const;
  // Argmax class per row; ties resolve to the lowest class index.
  std::vector<int> predict_class(const Matrix& x) const;

  std::string to_json() const;
  static BoostedModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static BoostedModel load(const std::filesystem::path& path);

 private:
  friend BoostedModel fit_regressor(const Matrix&, std::span<const double>,
                                    std::span<const double>, const BoostConfig&,
                                    std::vector<double>*);
  friend BoostedModel fit_classifier(const Matrix&, std::span<const int>,
                                     std::span<const double>, int, const BoostConfig&,
                                     std::vector<double>*);

  Kind kind_ = Kind::regressor;
  BoostConfig config_;
  std::size_t n_features_ = 0;
  std::vector<double> base_;                    // 1 entry, or one per class
  std::vector<std::vector<TreeNode>> rounds_;   // per round: 1 tree, or one per class
};

// Squared-error boosting. The base score is the weighted mean of y; each
// round fits residual gradients g = F - y with unit hessians. Optionally
// records the weighted SSE after the base and after every round.
BoostedModel fit_regressor(const Matrix& x, std::span<const double> y,
                           std::span<const double> weight, const BoostConfig& config,
                           std::vector<double>* loss_trace = nullptr);

// Softmax boosting over n_classes; every round fits one tree per class
// on g = p_k - [y = k], h = p_k (1 - p_k), sample-weighted. Records the
// weighted negative log-likelihood when a trace is supplied.
BoostedModel fit_classifier(const Matrix& x, std::span<const int> labels,
                            std::span<const double> weight, int n_classes,
                            const BoostConfig& config,
                            std::vector<double>* loss_trace = nullptr);

double weighted_sse(std::span<const double> pred, std::span<const double> y,
                    std::span<const double> weight);

}  // namespace plugcast
