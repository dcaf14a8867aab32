#include <algorithm>

#include "forecaster_detail.hpp"
#include "plugcast/parallel.hpp"
#include "plugcast/postprocess.hpp"

namespace plugcast {

using json = nlohmann::json;

namespace {

constexpr std::size_t kCalCols = static_cast<std::size_t>(kCalendarFeatureCount);
constexpr std::size_t kStates = static_cast<std::size_t>(kNumStates);

// Calendar block shared by the autoregressive features: everything except
// the trend column, which extrapolates poorly under recursion.
constexpr std::size_t kArCalendarCols = kCalCols - 1;

}  // namespace

// ---------------------------------------------------------------------------
// Boosted autoregression per (station, state)

void TreeAutoregForecaster::fit(const Panel& train, const FitOptions& options) {
  fc_detail::require_complete(train, "ar_tree");
  fc_detail::set_info(info_, train, options);
  if (train.n_times() < static_cast<std::size_t>(n_lags_) + 1) {
    throw std::invalid_argument("ar_tree: training panel shorter than the lag window");
  }

  const std::size_t n_t = train.n_times();
  const Matrix calendar = fc_detail::calendar_matrix(train.times, info_);
  std::vector<std::int64_t> trend(n_t);
  for (std::size_t t = 0; t < n_t; ++t) trend[t] = train.key(t).trend;

  models_.clear();
  models_.resize(train.n_stations() * kStates);
  tails_.assign(train.n_stations() * kStates, {});

  parallel_for(train.n_stations() * kStates, options.jobs, [&](std::size_t idx) {
    const std::size_t s = idx / kStates;
    const std::size_t k = idx % kStates;
    std::vector<double> series(n_t);
    for (std::size_t t = 0; t < n_t; ++t) {
      series[t] = (*train.cell(t, s))[k];
    }
    const LagMatrix lm = lag_matrix(series, trend, n_lags_);
    if (lm.y.empty()) {
      throw std::invalid_argument("ar_tree: no contiguous lag windows in the training panel");
    }
    Matrix x(lm.y.size(), kArCalendarCols + static_cast<std::size_t>(n_lags_));
    for (std::size_t r = 0; r < lm.y.size(); ++r) {
      const std::size_t t = lm.row_time[r];
      for (std::size_t c = 0; c < kArCalendarCols; ++c) x(r, c) = calendar(t, c);
      for (int j = 0; j < n_lags_; ++j) {
        x(r, kArCalendarCols + static_cast<std::size_t>(j)) =
            lm.x(r, static_cast<std::size_t>(j));
      }
    }
    const std::vector<double> w = fc_detail::row_weights(options.weights, lm.row_time);
    models_[idx] = fit_regressor(x, lm.y, w, config_);
    tails_[idx].assign(series.end() - n_lags_, series.end());
  });
}

ForecastPanel TreeAutoregForecaster::forecast(std::span<const Timestamp> times) const {
  fc_detail::require_fitted(info_, "ar_tree");
  fc_detail::require_ascending(times, "ar_tree");
  fc_detail::require_after_train(times, info_, "ar_tree");

  const std::size_t n_stations = info_.stations.size();
  ForecastPanel fp;
  for (const auto& st : info_.stations) fp.nodes.push_back(st.id);
  fp.times.assign(times.begin(), times.end());
  fp.values.assign(times.size() * n_stations, StateVector{});

  std::vector<std::vector<double>> lags = tails_;  // oldest first per series
  const std::int64_t horizon = times.back() - info_.train_end;
  std::vector<double> row(kArCalendarCols + static_cast<std::size_t>(n_lags_));
  std::size_t out_t = 0;

  for (std::int64_t h = 1; h <= horizon; ++h) {
    const Timestamp ts = info_.train_end + h;
    const Timestamp one[] = {ts};
    const Matrix calendar = fc_detail::calendar_matrix(one, info_);
    const bool wanted = out_t < times.size() && times[out_t] == ts;
    for (std::size_t s = 0; s < n_stations; ++s) {
      for (int k = 0; k < kNumStates; ++k) {
        const std::size_t idx = s * kNumStates + static_cast<std::size_t>(k);
        auto& tail = lags[idx];
        for (std::size_t c = 0; c < kArCalendarCols; ++c) row[c] = calendar(0, c);
        for (int j = 1; j <= n_lags_; ++j) {
          row[kArCalendarCols + static_cast<std::size_t>(j - 1)] =
              tail[tail.size() - static_cast<std::size_t>(j)];
        }
        const double value = models_[idx].predict_one(row);
        tail.erase(tail.begin());
        tail.push_back(value);
        if (wanted) fp.at(out_t, s)[static_cast<std::size_t>(k)] = value;
      }
    }
    if (wanted) ++out_t;
  }
  return fp;
}

void TreeAutoregForecaster::save(const std::filesystem::path& dir) const {
  fc_detail::require_fitted(info_, "ar_tree");
  ForecasterIO::write_manifest(
      dir, kind(), info_,
      json{{"n_lags", n_lags_}, {"boost", ForecasterIO::boost_config_to_json(config_)}});
  // One payload file per station keeps individual files a manageable size.
  for (std::size_t s = 0; s < info_.stations.size(); ++s) {
    json models = json::array();
    json tails = json::array();
    for (int k = 0; k < kNumStates; ++k) {
      const std::size_t idx = s * kNumStates + static_cast<std::size_t>(k);
      models.push_back(ForecasterIO::model_to_json(models_[idx]));
      tails.push_back(tails_[idx]);
    }
    ForecasterIO::write_json_file(dir / ("station_" + std::to_string(s) + ".json"),
                                  json{{"models", std::move(models)}, {"tails", std::move(tails)}});
  }
}

std::unique_ptr<TreeAutoregForecaster> TreeAutoregForecaster::load(
    const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  const json& params = manifest.at("params");
  auto model = std::make_unique<TreeAutoregForecaster>(
      params.at("n_lags").get<int>(),
      ForecasterIO::boost_config_from_json(params.at("boost")));
  model->info_ = ForecasterIO::info_from_json(manifest);
  for (std::size_t s = 0; s < model->info_.stations.size(); ++s) {
    const json payload =
        ForecasterIO::read_json_file(dir / ("station_" + std::to_string(s) + ".json"));
    for (int k = 0; k < kNumStates; ++k) {
      model->models_.push_back(
          ForecasterIO::model_from_json(payload.at("models").at(static_cast<std::size_t>(k))));
      model->tails_.push_back(
          payload.at("tails").at(static_cast<std::size_t>(k)).get<std::vector<double>>());
      if (model->tails_.back().size() != static_cast<std::size_t>(model->n_lags_)) {
        throw std::runtime_error("ar_tree: bundle tail length mismatch");
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Joint category classifier

void CategoryClassifierForecaster::fit(const Panel& train, const FitOptions& options) {
  fc_detail::set_info(info_, train, options);
  if (train.plugs != kPlugsPerStation) {
    throw std::invalid_argument("classifier: the categorical alphabet covers three-plug stations");
  }

  const Matrix calendar = fc_detail::calendar_matrix(train.times, info_);
  std::vector<int> labels;
  std::vector<std::size_t> row_time;
  std::vector<std::pair<std::size_t, std::size_t>> rows;  // (t, s)
  for (std::size_t t = 0; t < train.n_times(); ++t) {
    for (std::size_t s = 0; s < train.n_stations(); ++s) {
      const auto& cell = train.cell(t, s);
      if (!cell.has_value()) continue;
      rows.emplace_back(t, s);
      row_time.push_back(t);
      labels.push_back(encode_state(round_rescale(*cell, train.plugs)).index);
    }
  }
  if (rows.empty()) throw std::invalid_argument("classifier: no observed cells to train on");

  Matrix x(rows.size(), 1 + kCalCols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto [t, s] = rows[r];
    x(r, 0) = static_cast<double>(s);
    for (std::size_t c = 0; c < kCalCols; ++c) x(r, 1 + c) = calendar(t, c);
  }
  const std::vector<double> w = fc_detail::row_weights(options.weights, row_time);
  model_ = fit_classifier(x, labels, w,
                          static_cast<int>(CategoryTable::instance().size()), config_);
}

ForecastPanel CategoryClassifierForecaster::forecast(std::span<const Timestamp> times) const {
  fc_detail::require_fitted(info_, "classifier");
  fc_detail::require_ascending(times, "classifier");

  const Matrix calendar = fc_detail::calendar_matrix(times, info_);
  ForecastPanel fp;
  for (const auto& st : info_.stations) fp.nodes.push_back(st.id);
  fp.times.assign(times.begin(), times.end());
  fp.values.assign(times.size() * fp.n_nodes(), StateVector{});

  std::vector<double> row(1 + kCalCols);
  for (std::size_t t = 0; t < times.size(); ++t) {
    for (std::size_t s = 0; s < fp.n_nodes(); ++s) {
      row[0] = static_cast<double>(s);
      for (std::size_t c = 0; c < kCalCols; ++c) row[1 + c] = calendar(t, c);
      fp.at(t, s) = decode_state(model_.predict_class_one(row)).to_real();
    }
  }
  return fp;
}

void CategoryClassifierForecaster::save(const std::filesystem::path& dir) const {
  fc_detail::require_fitted(info_, "classifier");
  ForecasterIO::write_manifest(dir, kind(), info_,
                               json{{"boost", ForecasterIO::boost_config_to_json(config_)}});
  ForecasterIO::write_json_file(dir / "classifier.json",
                                json{{"model", ForecasterIO::model_to_json(model_)}});
}

std::unique_ptr<CategoryClassifierForecaster> CategoryClassifierForecaster::load(
    const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  auto model = std::make_unique<CategoryClassifierForecaster>(
      ForecasterIO::boost_config_from_json(manifest.at("params").at("boost")));
  model->info_ = ForecasterIO::info_from_json(manifest);
  model->model_ = ForecasterIO::model_from_json(
      ForecasterIO::read_json_file(dir / "classifier.json").at("model"));
  return model;
}

// ---------------------------------------------------------------------------
// Chained per-node regressions

ChainForecaster::ChainForecaster(HierarchyLevel level, std::array<int, kNumStates> order,
                                 BoostConfig config)
    : level_(level), order_(order), config_(config) {
  if (level_ == HierarchyLevel::station) {
    throw std::invalid_argument("chain: defined for the area and global levels");
  }
  std::array<bool, kNumStates> seen{};
  for (int k : order_) {
    if (k < 0 || k >= kNumStates || seen[static_cast<std::size_t>(k)]) {
      throw std::invalid_argument("chain: order must be a permutation of the four states");
    }
    seen[static_cast<std::size_t>(k)] = true;
  }
}

std::vector<std::string> ChainForecaster::target_nodes() const {
  if (level_ == HierarchyLevel::area) {
    return {std::string(kAreaNames[0]), std::string(kAreaNames[1]),
            std::string(kAreaNames[2]), std::string(kAreaNames[3])};
  }
  return {std::string(kGlobalNodeName)};
}

void ChainForecaster::fit(const Panel& train, const FitOptions& options) {
  fc_detail::set_info(info_, train, options);
  const Hierarchy hierarchy(train.stations);
  const Matrix calendar = fc_detail::calendar_matrix(train.times, info_);

  const std::vector<std::string> nodes = target_nodes();

  struct NodeRows {
    std::vector<std::size_t> defined;
    std::vector<StateVector> targets;
    std::vector<double> w;
  };
  std::vector<NodeRows> rows(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const std::size_t hier_node = nodes[n] == kGlobalNodeName
                                      ? hierarchy.global_node()
                                      : hierarchy.area_node(*parse_area(nodes[n]));
    for (std::size_t t = 0; t < train.n_times(); ++t) {
      const auto node_values = aggregate_partial(train, hierarchy, t);
      if (node_values[hier_node].has_value()) {
        rows[n].defined.push_back(t);
        rows[n].targets.push_back(*node_values[hier_node]);
      }
    }
    if (rows[n].defined.empty()) {
      throw std::invalid_argument("chain: no fully observed timestamps for node " + nodes[n]);
    }
    rows[n].w = fc_detail::row_weights(options.weights, rows[n].defined);
  }

  models_.clear();
  models_.resize(nodes.size() * kStates);
  parallel_for(nodes.size() * kStates, options.jobs, [&](std::size_t idx) {
    const NodeRows& nr = rows[idx / kStates];
    const std::size_t pos = idx % kStates;
    Matrix x(nr.defined.size(), kCalCols + pos);
    std::vector<double> y(nr.defined.size());
    for (std::size_t r = 0; r < nr.defined.size(); ++r) {
      for (std::size_t c = 0; c < kCalCols; ++c) {
        x(r, c) = calendar(nr.defined[r], c);
      }
      // Earlier chain states enter as their true values during fit.
      for (std::size_t e = 0; e < pos; ++e) {
        x(r, kCalCols + e) = nr.targets[r][static_cast<std::size_t>(order_[e])];
      }
      y[r] = nr.targets[r][static_cast<std::size_t>(order_[pos])];
    }
    models_[idx] = fit_regressor(x, y, nr.w, config_);
  });
}

ForecastPanel ChainForecaster::forecast(std::span<const Timestamp> times) const {
  fc_detail::require_fitted(info_, "chain");
  fc_detail::require_ascending(times, "chain");

  const Matrix calendar = fc_detail::calendar_matrix(times, info_);
  ForecastPanel fp;
  fp.nodes = target_nodes();
  fp.times.assign(times.begin(), times.end());
  fp.values.assign(times.size() * fp.n_nodes(), StateVector{});

  std::vector<double> row(kCalCols + kNumStates);
  for (std::size_t t = 0; t < times.size(); ++t) {
    for (std::size_t n = 0; n < fp.n_nodes(); ++n) {
      StateVector v{};
      for (std::size_t pos = 0; pos < kStates; ++pos) {
        for (std::size_t c = 0; c < kCalCols; ++c) row[c] = calendar(t, c);
        for (std::size_t e = 0; e < pos; ++e) {
          row[kCalCols + e] = v[static_cast<std::size_t>(order_[e])];
        }
        const std::span<const double> features(row.data(), kCalCols + pos);
        v[static_cast<std::size_t>(order_[pos])] =
            models_[n * kNumStates + pos].predict_one(features);
      }
      fp.at(t, n) = v;
    }
  }
  return fp;
}

void ChainForecaster::save(const std::filesystem::path& dir) const {
  fc_detail::require_fitted(info_, "chain");
  ForecasterIO::write_manifest(
      dir, kind(), info_,
      json{{"level", std::string(level_name(level_))},
           {"order", order_},
           {"boost", ForecasterIO::boost_config_to_json(config_)}});
  json models = json::array();
  for (const auto& m : models_) models.push_back(ForecasterIO::model_to_json(m));
  ForecasterIO::write_json_file(dir / "chain.json", json{{"models", std::move(models)}});
}

std::unique_ptr<ChainForecaster> ChainForecaster::load(const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  const json& params = manifest.at("params");
  auto model = std::make_unique<ChainForecaster>(
      parse_level(params.at("level").get<std::string>()),
      params.at("order").get<std::array<int, kNumStates>>(),
      ForecasterIO::boost_config_from_json(params.at("boost")));
  model->info_ = ForecasterIO::info_from_json(manifest);
  const json payload = ForecasterIO::read_json_file(dir / "chain.json");
  for (const json& m : payload.at("models")) {
    model->models_.push_back(ForecasterIO::model_from_json(m));
  }
  const std::size_t expected = model->target_nodes().size() * kNumStates;
  if (model->models_.size() != expected) {
    throw std::runtime_error("chain: bundle model count mismatch");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Pooled per-level regressors

std::vector<std::string> LevelRegressorForecaster::target_nodes() const {
  switch (level_) {
    case HierarchyLevel::station: {
      std::vector<std::string> out;
      for (const auto& st : info_.stations) out.push_back(st.id);
      return out;
    }
    case HierarchyLevel::area:
      return {std::string(kAreaNames[0]), std::string(kAreaNames[1]),
              std::string(kAreaNames[2]), std::string(kAreaNames[3])};
    default:
      return {std::string(kGlobalNodeName)};
  }
}

void LevelRegressorForecaster::fit(const Panel& train, const FitOptions& options) {
  fc_detail::set_info(info_, train, options);
  const Hierarchy hierarchy(train.stations);
  const Matrix calendar = fc_detail::calendar_matrix(train.times, info_);

  std::vector<std::size_t> row_time;
  std::vector<double> row_ordinal;
  std::vector<StateVector> row_value;

  if (level_ == HierarchyLevel::station) {
    for (std::size_t t = 0; t < train.n_times(); ++t) {
      for (std::size_t s = 0; s < train.n_stations(); ++s) {
        const auto& cell = train.cell(t, s);
        if (!cell.has_value()) continue;
        row_time.push_back(t);
        row_ordinal.push_back(static_cast<double>(s));
        row_value.push_back(*cell);
      }
    }
  } else {
    for (std::size_t t = 0; t < train.n_times(); ++t) {
      const auto node_values = aggregate_partial(train, hierarchy, t);
      if (level_ == HierarchyLevel::area) {
        for (int a = 0; a < kNumAreas; ++a) {
          const auto& v = node_values[hierarchy.area_node(static_cast<Area>(a))];
          if (!v.has_value()) continue;
          row_time.push_back(t);
          row_ordinal.push_back(static_cast<double>(a));
          row_value.push_back(*v);
        }
      } else {
        const auto& v = node_values[hierarchy.global_node()];
        if (!v.has_value()) continue;
        row_time.push_back(t);
        row_ordinal.push_back(0.0);
        row_value.push_back(*v);
      }
    }
  }
  if (row_time.empty()) {
    throw std::invalid_argument("level_gbt: no observed rows at this level");
  }

  Matrix x(row_time.size(), 1 + kCalCols);
  for (std::size_t r = 0; r < row_time.size(); ++r) {
    x(r, 0) = row_ordinal[r];
    for (std::size_t c = 0; c < kCalCols; ++c) {
      x(r, 1 + c) = calendar(row_time[r], c);
    }
  }
  const std::vector<double> w = fc_detail::row_weights(options.weights, row_time);

  models_.clear();
  models_.resize(kStates);
  parallel_for(kStates, options.jobs, [&](std::size_t k) {
    std::vector<double> y(row_time.size());
    for (std::size_t r = 0; r < row_time.size(); ++r) {
      y[r] = row_value[r][k];
    }
    models_[k] = fit_regressor(x, y, w, config_);
  });
}

ForecastPanel LevelRegressorForecaster::forecast(std::span<const Timestamp> times) const {
  fc_detail::require_fitted(info_, "level_gbt");
  fc_detail::require_ascending(times, "level_gbt");

  const Matrix calendar = fc_detail::calendar_matrix(times, info_);
  ForecastPanel fp;
  fp.nodes = target_nodes();
  fp.times.assign(times.begin(), times.end());
  fp.values.assign(times.size() * fp.n_nodes(), StateVector{});

  std::vector<double> row(1 + kCalCols);
  for (std::size_t t = 0; t < times.size(); ++t) {
    for (std::size_t n = 0; n < fp.n_nodes(); ++n) {
      row[0] = static_cast<double>(n);
      for (std::size_t c = 0; c < kCalCols; ++c) row[1 + c] = calendar(t, c);
      StateVector v{};
      for (int k = 0; k < kNumStates; ++k) {
        v[static_cast<std::size_t>(k)] = models_[static_cast<std::size_t>(k)].predict_one(row);
      }
      fp.at(t, n) = v;
    }
  }
  return fp;
}

void LevelRegressorForecaster::save(const std::filesystem::path& dir) const {
  fc_detail::require_fitted(info_, "level_gbt");
  ForecasterIO::write_manifest(
      dir, kind(), info_,
      json{{"level", std::string(level_name(level_))},
           {"boost", ForecasterIO::boost_config_to_json(config_)}});
  json models = json::array();
  for (const auto& m : models_) models.push_back(ForecasterIO::model_to_json(m));
  ForecasterIO::write_json_file(dir / "level.json", json{{"models", std::move(models)}});
}

std::unique_ptr<LevelRegressorForecaster> LevelRegressorForecaster::load(
    const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  const json& params = manifest.at("params");
  auto model = std::make_unique<LevelRegressorForecaster>(
      parse_level(params.at("level").get<std::string>()),
      ForecasterIO::boost_config_from_json(params.at("boost")));
  model->info_ = ForecasterIO::info_from_json(manifest);
  const json payload = ForecasterIO::read_json_file(dir / "level.json");
  for (const json& m : payload.at("models")) {
    model->models_.push_back(ForecasterIO::model_from_json(m));
  }
  if (model->models_.size() != kStates) {
    throw std::runtime_error("level_gbt: bundle model count mismatch");
  }
  return model;
}

}  // namespace plugcast
