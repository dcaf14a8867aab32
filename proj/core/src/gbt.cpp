#include "plugcast/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace plugcast {

namespace {

using nlohmann::json;

void ensure_finite_matrix(const Matrix& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("gbt: non-finite feature value");
  }
}

std::vector<double> unit_weights_if_empty(std::span<const double> weight, std::size_t n) {
  if (weight.empty()) return std::vector<double>(n, 1.0);
  if (weight.size() != n) throw std::invalid_argument("gbt: weight length mismatch");
  double total = 0.0;
  for (double w : weight) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("gbt: bad sample weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("gbt: weights sum to zero");
  return std::vector<double>(weight.begin(), weight.end());
}

// Row ids per feature, ordered by (feature value, row id). The secondary
// key pins the float summation order, making fits byte-reproducible.
std::vector<std::vector<std::int32_t>> sorted_columns(const Matrix& x) {
  const std::size_t n = x.rows();
  std::vector<std::vector<std::int32_t>> columns(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& ord = columns[f];
    ord.resize(n);
    for (std::size_t i = 0; i < n; ++i) ord[i] = static_cast<std::int32_t>(i);
    std::sort(ord.begin(), ord.end(), [&](std::int32_t a, std::int32_t b) {
      const double va = x(static_cast<std::size_t>(a), f);
      const double vb = x(static_cast<std::size_t>(b), f);
      if (va != vb) return va < vb;
      return a < b;
    });
  }
  return columns;
}

struct TreeBuilder {
  const Matrix& x;
  std::span<const double> wg;  // weight * gradient
  std::span<const double> wh;  // weight * hessian
  std::span<const double> w;
  const BoostConfig& cfg;
  std::vector<double>* leaf_incr;  // per-row raw leaf value, optional

  TreeNode build(std::vector<std::vector<std::int32_t>> lists, int depth) const {
    TreeNode node;
    const auto& rows = lists[0];
    double g_sum = 0.0, h_sum = 0.0, w_sum = 0.0;
    for (std::int32_t r : rows) {
      const auto i = static_cast<std::size_t>(r);
      g_sum += wg[i];
      h_sum += wh[i];
      w_sum += w[i];
    }
    const double denom = h_sum + cfg.l2_leaf;
    node.value = denom > 0.0 ? -g_sum / denom : 0.0;

    if (depth < cfg.max_depth && rows.size() >= 2 &&
        w_sum >= 2.0 * cfg.min_samples_leaf) {
      int best_f = -1;
      double best_t = 0.0;
      double best_gain = 0.0;
      const double parent_score = denom > 0.0 ? g_sum * g_sum / denom : 0.0;
      for (std::size_t f = 0; f < lists.size(); ++f) {
        const auto& ord = lists[f];
        double gl = 0.0, hl = 0.0, wl = 0.0;
        for (std::size_t i = 0; i + 1 < ord.size(); ++i) {
          const auto r = static_cast<std::size_t>(ord[i]);
          gl += wg[r];
          hl += wh[r];
          wl += w[r];
          const double xv = x(r, f);
          const double xn = x(static_cast<std::size_t>(ord[i + 1]), f);
          if (xv == xn) continue;
          if (wl < cfg.min_samples_leaf || w_sum - wl < cfg.min_samples_leaf) continue;
          const double dl = hl + cfg.l2_leaf;
          const double dr = (h_sum - hl) + cfg.l2_leaf;
          const double gr = g_sum - gl;
          const double gain = (dl > 0.0 ? gl * gl / dl : 0.0) +
                              (dr > 0.0 ? gr * gr / dr : 0.0) - parent_score;
          // Strict improvement, features and thresholds visited in
          // ascending order: equal gains keep the lowest pair.
          if (gain > best_gain) {
            best_gain = gain;
            best_f = static_cast<int>(f);
            double t = xv + 0.5 * (xn - xv);
            if (!(t >= xv) || !(t < xn)) t = xv;  // midpoint rounded onto an endpoint
            best_t = t;
          }
        }
      }
      if (best_f >= 0) {
        node.feature = best_f;
        node.threshold = best_t;
        const std::size_t n_features = lists.size();
        std::vector<std::vector<std::int32_t>> left(n_features), right(n_features);
        for (std::size_t f = 0; f < n_features; ++f) {
          for (std::int32_t r : lists[f]) {
            if (x(static_cast<std::size_t>(r), static_cast<std::size_t>(best_f)) <= best_t) {
              left[f].push_back(r);
            } else {
              right[f].push_back(r);
            }
          }
          lists[f].clear();
          lists[f].shrink_to_fit();
        }
        node.left = std::make_unique<TreeNode>(build(std::move(left), depth + 1));
        node.right = std::make_unique<TreeNode>(build(std::move(right), depth + 1));
        return node;
      }
    }

    if (leaf_incr) {
      for (std::int32_t r : rows) (*leaf_incr)[static_cast<std::size_t>(r)] = node.value;
    }
    return node;
  }
};

json node_to_json(const TreeNode& node) {
  if (node.is_leaf()) return json{{"v", node.value}};
  return json{{"f", node.feature},
              {"t", node.threshold},
              {"l", node_to_json(*node.left)},
              {"r", node_to_json(*node.right)}};
}

TreeNode node_from_json(const json& j, std::size_t n_features) {
  TreeNode node;
  if (j.contains("v")) {
    node.value = j["v"].get<double>();
    return node;
  }
  node.feature = j.at("f").get<int>();
  if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
    throw std::runtime_error("gbt: tree feature index out of range");
  }
  node.threshold = j.at("t").get<double>();
  node.left = std::make_unique<TreeNode>(node_from_json(j.at("l"), n_features));
  node.right = std::make_unique<TreeNode>(node_from_json(j.at("r"), n_features));
  return node;
}

void softmax_row(std::span<double> scores) {
  double hi = scores[0];
  for (double s : scores) hi = std::max(hi, s);
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - hi);
    total += s;
  }
  for (double& s : scores) s /= total;
}

}  // namespace

TreeNode fit_tree(const Matrix& x, std::span<const double> grad,
                  std::span<const double> hess, std::span<const double> weight,
                  const BoostConfig& config) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_tree: no rows");
  if (grad.size() != n || hess.size() != n) {
    throw std::invalid_argument("fit_tree: gradient length mismatch");
  }
  ensure_finite_matrix(x);
  const std::vector<double> w = unit_weights_if_empty(weight, n);
  std::vector<double> wg(n), wh(n);
  for (std::size_t i = 0; i < n; ++i) {
    wg[i] = w[i] * grad[i];
    wh[i] = w[i] * hess[i];
  }
  TreeBuilder builder{x, wg, wh, w, config, nullptr};
  return builder.build(sorted_columns(x), 0);
}

double predict_tree(const TreeNode& root, std::span<const double> row) {
  const TreeNode* node = &root;
  while (!node->is_leaf()) {
    node = row[static_cast<std::size_t>(node->feature)] <= node->threshold
               ? node->left.get()
               : node->right.get();
  }
  return node->value;
}

double weighted_sse(std::span<const double> pred, std::span<const double> y,
                    std::span<const double> weight) {
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - y[i];
    const double w = weight.empty() ? 1.0 : weight[i];
    total += w * d * d;
  }
  return total;
}

BoostedModel fit_regressor(const Matrix& x, std::span<const double> y,
                           std::span<const double> weight, const BoostConfig& config,
                           std::vector<double>* loss_trace) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_regressor: no rows");
  if (y.size() != n) throw std::invalid_argument("fit_regressor: target length mismatch");
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_regressor: non-finite target");
  }
  ensure_finite_matrix(x);
  const std::vector<double> w = unit_weights_if_empty(weight, n);

  BoostedModel model;
  model.kind_ = BoostedModel::Kind::regressor;
  model.config_ = config;
  model.n_features_ = x.cols();

  double wy = 0.0, wt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wy += w[i] * y[i];
    wt += w[i];
  }
  const double base = wy / wt;
  model.base_.assign(1, base);

  std::vector<double> score(n, base);
  if (loss_trace) loss_trace->push_back(weighted_sse(score, y, w));

  const auto columns = sorted_columns(x);
  std::vector<double> wg(n), wh(n), incr(n, 0.0);
  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      wg[i] = w[i] * (score[i] - y[i]);
      wh[i] = w[i];
    }
    TreeBuilder builder{x, wg, wh, w, config, &incr};
    TreeNode tree = builder.build(columns, 0);
    for (std::size_t i = 0; i < n; ++i) score[i] += config.learning_rate * incr[i];
    model.rounds_.emplace_back();
    model.rounds_.back().push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(weighted_sse(score, y, w));
  }
  return model;
}

BoostedModel fit_classifier(const Matrix& x, std::span<const int> labels,
                            std::span<const double> weight, int n_classes,
                            const BoostConfig& config,
                            std::vector<double>* loss_trace) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_classifier: no rows");
  if (labels.size() != n) throw std::invalid_argument("fit_classifier: label length mismatch");
  if (n_classes < 2) throw std::invalid_argument("fit_classifier: need at least 2 classes");
  for (int lbl : labels) {
    if (lbl < 0 || lbl >= n_classes) {
      throw std::invalid_argument("fit_classifier: label out of range");
    }
  }
  ensure_finite_matrix(x);
  const std::vector<double> w = unit_weights_if_empty(weight, n);

  BoostedModel model;
  model.kind_ = BoostedModel::Kind::classifier;
  model.config_ = config;
  model.n_features_ = x.cols();
  model.base_.assign(static_cast<std::size_t>(n_classes), 0.0);

  const std::size_t k_count = static_cast<std::size_t>(n_classes);
  Matrix score(n, k_count);
  Matrix proba(n, k_count);
  const auto columns = sorted_columns(x);

  auto update_proba_and_loss = [&]() -> double {
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto p = proba.row(i);
      const auto s = score.row(i);
      std::copy(s.begin(), s.end(), p.begin());
      softmax_row(p);
      nll -= w[i] * std::log(std::max(p[static_cast<std::size_t>(labels[i])], 1e-15));
    }
    return nll;
  };

  double nll = update_proba_and_loss();
  if (loss_trace) loss_trace->push_back(nll);

  std::vector<double> wg(n), wh(n), incr(n, 0.0);
  for (int round = 0; round < config.rounds; ++round) {
    model.rounds_.emplace_back();
    for (std::size_t k = 0; k < k_count; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = proba(i, k);
        const double target = labels[i] == static_cast<int>(k) ? 1.0 : 0.0;
        wg[i] = w[i] * (p - target);
        wh[i] = w[i] * std::max(p * (1.0 - p), 1e-16);
      }
      TreeBuilder builder{x, wg, wh, w, config, &incr};
      TreeNode tree = builder.build(columns, 0);
      for (std::size_t i = 0; i < n; ++i) score(i, k) += config.learning_rate * incr[i];
      model.rounds_.back().push_back(std::move(tree));
    }
    nll = update_proba_and_loss();
    if (loss_trace) loss_trace->push_back(nll);
  }
  return model;
}

std::vector<double> BoostedModel::predict(const Matrix& x) const {
  if (kind_ != Kind::regressor) throw std::logic_error("predict: model is not a regressor");
  if (x.cols() != n_features_) throw std::invalid_argument("predict: feature count mismatch");
  std::vector<double> out(x.rows(), base_[0]);
  for (const auto& round : rounds_) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      out[i] += config_.learning_rate * predict_tree(round[0], x.row(i));
    }
  }
  return out;
}

double BoostedModel::predict_one(std::span<const double> row) const {
  if (kind_ != Kind::regressor) throw std::logic_error("predict_one: model is not a regressor");
  if (row.size() != n_features_) throw std::invalid_argument("predict_one: feature count mismatch");
  double out = base_[0];
  for (const auto& round : rounds_) out += config_.learning_rate * predict_tree(round[0], row);
  return out;
}

int BoostedModel::predict_class_one(std::span<const double> row) const {
  if (kind_ != Kind::classifier) {
    throw std::logic_error("predict_class_one: model is not a classifier");
  }
  if (row.size() != n_features_) {
    throw std::invalid_argument("predict_class_one: feature count mismatch");
  }
  int best = 0;
  double best_score = 0.0;
  for (std::size_t k = 0; k < base_.size(); ++k) {
    double score = base_[k];
    for (const auto& round : rounds_) {
      score += config_.learning_rate * predict_tree(round[k], row);
    }
    if (k == 0 || score > best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  return best;
}

Matrix BoostedModel::predict_scores(const Matrix& x) const {
  if (kind_ != Kind::classifier) throw std::logic_error("predict_scores: model is not a classifier");
  if (x.cols() != n_features_) throw std::invalid_argument("predict_scores: feature count mismatch");
  Matrix out(x.rows(), base_.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < base_.size(); ++k) out(i, k) = base_[k];
  }
  for (const auto& round : rounds_) {
    for (std::size_t k = 0; k < base_.size(); ++k) {
      for (std::size_t i = 0; i < x.rows(); ++i) {
        out(i, k) += config_.learning_rate * predict_tree(round[k], x.row(i));
      }
    }
  }
  return out;
}

Matrix BoostedModel::predict_proba(const Matrix& x) const {
  Matrix out = predict_scores(x);
  for (std::size_t i = 0; i < out.rows(); ++i) softmax_row(out.row(i));
  return out;
}

std::vector<int> BoostedModel::predict_class(const Matrix& x) const {
  const Matrix scores = predict_scores(x);
  std::vector<int> out(scores.rows(), 0);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double hi = scores(i, 0);
    for (std::size_t k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > hi) {
        hi = scores(i, k);
        out[i] = static_cast<int>(k);
      }
    }
  }
  return out;
}

std::string BoostedModel::to_json() const {
  json j;
  j["schema"] = "plugcast.gbt.v1";
  j["kind"] = kind_ == Kind::regressor ? "regressor" : "classifier";
  j["n_features"] = n_features_;
  j["config"] = {{"rounds", config_.rounds},
                 {"max_depth", config_.max_depth},
                 {"learning_rate", config_.learning_rate},
                 {"min_samples_leaf", config_.min_samples_leaf},
                 {"l2_leaf", config_.l2_leaf}};
  j["base"] = base_;
  json trees = json::array();
  for (const auto& round : rounds_) {
    json per_class = json::array();
    for (const auto& tree : round) per_class.push_back(node_to_json(tree));
    trees.push_back(std::move(per_class));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

BoostedModel BoostedModel::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "plugcast.gbt.v1") {
    throw std::runtime_error("gbt: unknown schema");
  }
  BoostedModel model;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "regressor") {
    model.kind_ = Kind::regressor;
  } else if (kind == "classifier") {
    model.kind_ = Kind::classifier;
  } else {
    throw std::runtime_error("gbt: unknown kind " + kind);
  }
  model.n_features_ = j.at("n_features").get<std::size_t>();
  const json& c = j.at("config");
  model.config_.rounds = c.at("rounds").get<int>();
  model.config_.max_depth = c.at("max_depth").get<int>();
  model.config_.learning_rate = c.at("learning_rate").get<double>();
  model.config_.min_samples_leaf = c.at("min_samples_leaf").get<double>();
  model.config_.l2_leaf = c.at("l2_leaf").get<double>();
  model.base_ = j.at("base").get<std::vector<double>>();
  if (model.base_.empty()) throw std::runtime_error("gbt: empty base");
  for (const json& round : j.at("trees")) {
    model.rounds_.emplace_back();
    for (const json& tree : round) {
      model.rounds_.back().push_back(node_from_json(tree, model.n_features_));
    }
    if (model.rounds_.back().size() != model.base_.size()) {
      throw std::runtime_error("gbt: tree count does not match class count");
    }
  }
  return model;
}

void BoostedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json() << '\n';
}

BoostedModel BoostedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace plugcast
