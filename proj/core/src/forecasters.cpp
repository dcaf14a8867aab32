#include "plugcast/forecasters.hpp"

#include <algorithm>
#include <cmath>

#include "forecaster_detail.hpp"
#include "plugcast/text.hpp"

namespace plugcast {

using json = nlohmann::json;

std::vector<double> exp_weights(std::span<const Timestamp> times, double tau_days,
                                Timestamp t_max) {
  if (!(tau_days > 0.0)) throw std::invalid_argument("exp_weights: tau must be positive");
  if (times.empty()) return {};
  const double tau_steps = tau_days * kStepsPerDay;
  Timestamp earliest = times[0];
  for (Timestamp ts : times) earliest = std::min(earliest, ts);
  // Uniform limit: when even the oldest timestamp would decay by less
  // than 1e-6, return exact ones so a huge tau is bitwise unweighted.
  if (static_cast<double>(t_max - earliest) / tau_steps < 1e-6) {
    return std::vector<double>(times.size(), 1.0);
  }
  std::vector<double> w;
  w.reserve(times.size());
  for (Timestamp ts : times) {
    w.push_back(std::exp(static_cast<double>(ts - t_max) / tau_steps));
  }
  return w;
}

HierarchyLevel parse_level(std::string_view name) {
  if (name == "station") return HierarchyLevel::station;
  if (name == "area") return HierarchyLevel::area;
  if (name == "global") return HierarchyLevel::global;
  throw std::runtime_error("unknown hierarchy level '" + std::string(name) + "'");
}

std::string_view level_name(HierarchyLevel level) {
  switch (level) {
    case HierarchyLevel::station:
      return "station";
    case HierarchyLevel::area:
      return "area";
    default:
      return "global";
  }
}

// ---------------------------------------------------------------------------
// Bundle IO helpers

json ForecasterIO::info_to_json(const TrainInfo& info) {
  json stations = json::array();
  for (const auto& st : info.stations) {
    stations.push_back({{"id", st.id},
                        {"latitude", st.latitude},
                        {"longitude", st.longitude},
                        {"area", std::string(area_name(st.area))}});
  }
  return json{{"plugs", info.plugs},
              {"origin", format_timestamp(info.origin)},
              {"train_start", format_timestamp(info.train_start)},
              {"train_end", format_timestamp(info.train_end)},
              {"stations", std::move(stations)},
              {"holidays", info.holidays.to_dates()}};
}

TrainInfo ForecasterIO::info_from_json(const json& j) {
  TrainInfo info;
  info.plugs = j.at("plugs").get<int>();
  const auto ts_field = [&](const char* key) {
    const auto text = j.at(key).get<std::string>();
    const auto ts = parse_timestamp(text);
    if (!ts) throw std::runtime_error(std::string("bundle: bad timestamp in ") + key);
    return *ts;
  };
  info.origin = ts_field("origin");
  info.train_start = ts_field("train_start");
  info.train_end = ts_field("train_end");
  for (const json& st : j.at("stations")) {
    const auto area = parse_area(st.at("area").get<std::string>());
    if (!area) throw std::runtime_error("bundle: unknown area in station list");
    info.stations.push_back(StationMeta{st.at("id").get<std::string>(),
                                        st.at("latitude").get<double>(),
                                        st.at("longitude").get<double>(), *area});
  }
  info.holidays = HolidayCalendar::none();
  for (const json& date : j.at("holidays")) {
    const auto day = parse_date(date.get<std::string>());
    if (!day) throw std::runtime_error("bundle: bad holiday date");
    info.holidays.add(*day);
  }
  info.fitted = true;
  return info;
}

json ForecasterIO::boost_config_to_json(const BoostConfig& c) {
  return json{{"rounds", c.rounds},
              {"max_depth", c.max_depth},
              {"learning_rate", c.learning_rate},
              {"min_samples_leaf", c.min_samples_leaf},
              {"l2_leaf", c.l2_leaf}};
}

BoostConfig ForecasterIO::boost_config_from_json(const json& j) {
  BoostConfig c;
  c.rounds = j.at("rounds").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.min_samples_leaf = j.at("min_samples_leaf").get<double>();
  c.l2_leaf = j.at("l2_leaf").get<double>();
  return c;
}

void ForecasterIO::write_manifest(const std::filesystem::path& dir, const std::string& kind,
                                  const TrainInfo& info, const json& params) {
  std::filesystem::create_directories(dir);
  json j = info_to_json(info);
  j["schema"] = "plugcast.bundle.v1";
  j["kind"] = kind;
  j["params"] = params;
  write_json_file(dir / "manifest.json", j);
}

ForecasterIO::json ForecasterIO::read_manifest(const std::filesystem::path& dir) {
  const json j = read_json_file(dir / "manifest.json");
  if (j.at("schema").get<std::string>() != "plugcast.bundle.v1") {
    throw std::runtime_error(dir.string() + ": unknown bundle schema");
  }
  return j;
}

void ForecasterIO::write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

ForecasterIO::json ForecasterIO::read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

namespace fc_detail {

void require_fitted(const TrainInfo& info, const char* kind) {
  if (!info.fitted) throw std::logic_error(std::string(kind) + ": forecast before fit");
}

void require_ascending(std::span<const Timestamp> times, const char* kind) {
  if (times.empty()) throw std::invalid_argument(std::string(kind) + ": no forecast times");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i - 1] < times[i])) {
      throw std::invalid_argument(std::string(kind) + ": forecast times must be ascending");
    }
  }
}

void require_after_train(std::span<const Timestamp> times, const TrainInfo& info,
                         const char* kind) {
  for (Timestamp ts : times) {
    if (!(ts > info.train_end)) {
      throw std::invalid_argument(std::string(kind) +
                                  ": recursive forecasts start after the training window");
    }
  }
}

void require_complete(const Panel& panel, const char* kind) {
  if (panel.n_times() == 0 || panel.n_stations() == 0) {
    throw std::invalid_argument(std::string(kind) + ": empty training panel");
  }
  if (panel.missing_count() > 0) {
    throw std::invalid_argument(std::string(kind) +
                                ": training panel has missing cells; impute or drop first");
  }
}

std::vector<double> row_weights(const std::vector<double>& time_weights,
                                std::span<const std::size_t> row_time) {
  if (time_weights.empty()) return {};
  std::vector<double> w;
  w.reserve(row_time.size());
  for (std::size_t t : row_time) w.push_back(time_weights.at(t));
  return w;
}

void set_info(TrainInfo& info, const Panel& train, const FitOptions& options) {
  if (train.n_times() == 0 || train.n_stations() == 0) {
    throw std::invalid_argument("fit: empty training panel");
  }
  if (!options.weights.empty() && options.weights.size() != train.n_times()) {
    throw std::invalid_argument("fit: weight vector does not match the time axis");
  }
  for (double w : options.weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("fit: bad sample weight");
  }
  info.plugs = train.plugs;
  info.stations = train.stations;
  info.origin = train.origin;
  info.train_start = train.times.front();
  info.train_end = train.times.back();
  info.holidays = options.holidays;
  info.fitted = true;
}

Matrix calendar_matrix(std::span<const Timestamp> times, const TrainInfo& info) {
  std::vector<TimeKey> keys;
  keys.reserve(times.size());
  for (Timestamp ts : times) keys.push_back(make_time_key(ts, info.origin));
  return featurize(keys, info.holidays);
}

}  // namespace fc_detail

// ---------------------------------------------------------------------------
// Seasonal profiles

namespace {

constexpr std::size_t kBuckets = 7 * static_cast<std::size_t>(kStepsPerDay);

double profile_stat(SeasonalProfileForecaster::Stat stat, std::vector<double>& values) {
  if (stat == SeasonalProfileForecaster::Stat::mean) {
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void SeasonalProfileForecaster::fit(const Panel& train, const FitOptions& options) {
  fc_detail::set_info(info_, train, options);
  const Hierarchy hierarchy(train.stations);
  node_names_ = hierarchy.node_names();
  const std::size_t n_nodes = node_names_.size();

  // Gather per-bucket samples; node values exist only where every member
  // station is observed.
  std::vector<std::vector<double>> samples(n_nodes * kNumStates * kBuckets);
  for (std::size_t t = 0; t < train.n_times(); ++t) {
    const TimeKey key = train.key(t);
    const std::size_t bucket =
        static_cast<std::size_t>(key.dow - 1) * kStepsPerDay + static_cast<std::size_t>(key.tod);
    const auto node_values = aggregate_partial(train, hierarchy, t);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      if (!node_values[n].has_value()) continue;
      for (std::size_t k = 0; k < kNumStates; ++k) {
        samples[(n * kNumStates + k) * kBuckets + bucket].push_back((*node_values[n])[k]);
      }
    }
  }

  profile_.assign(n_nodes * kNumStates * kBuckets, 0.0);
  fallback_nodes_.clear();
  for (std::size_t n = 0; n < n_nodes; ++n) {
    bool used_fallback = false;
    for (std::size_t k = 0; k < kNumStates; ++k) {
      std::vector<double> all;
      for (std::size_t b = 0; b < kBuckets; ++b) {
        const auto& bucket = samples[(n * kNumStates + k) * kBuckets + b];
        all.insert(all.end(), bucket.begin(), bucket.end());
      }
      if (all.empty()) {
        throw std::runtime_error("seasonal: no observations for node " + node_names_[n]);
      }
      const double fallback = profile_stat(stat_, all);
      for (std::size_t b = 0; b < kBuckets; ++b) {
        auto bucket = samples[(n * kNumStates + k) * kBuckets + b];
        if (bucket.empty()) {
          profile_[(n * kNumStates + k) * kBuckets + b] = fallback;
          used_fallback = true;
        } else {
          profile_[(n * kNumStates + k) * kBuckets + b] = profile_stat(stat_, bucket);
        }
      }
    }
    if (used_fallback) fallback_nodes_.push_back(node_names_[n]);
  }
}

ForecastPanel SeasonalProfileForecaster::forecast(std::span<const Timestamp> times) const {
  fc_detail::require_fitted(info_, "seasonal");
  fc_detail::require_ascending(times, "seasonal");
  ForecastPanel fp;
  fp.nodes = node_names_;
  fp.times.assign(times.begin(), times.end());
  fp.values.assign(times.size() * node_names_.size(), StateVector{});
  for (std::size_t t = 0; t < times.size(); ++t) {
    const std::size_t bucket =
        static_cast<std::size_t>(day_of_week(times[t]) - 1) * kStepsPerDay +
        static_cast<std::size_t>(time_of_day(times[t]));
    for (std::size_t n = 0; n < node_names_.size(); ++n) {
      StateVector v{};
      for (std::size_t k = 0; k < kNumStates; ++k) {
        v[k] = profile_[(n * kNumStates + k) * kBuckets + bucket];
      }
      fp.at(t, n) = v;
    }
  }
  return fp;
}

void SeasonalProfileForecaster::save(const std::filesystem::path& dir) const {
  fc_detail::require_fitted(info_, "seasonal");
  ForecasterIO::write_manifest(dir, kind(), info_,
                               json{{"stat", stat_ == Stat::median ? "median" : "mean"}});
  json payload;
  payload["nodes"] = node_names_;
  payload["fallback_nodes"] = fallback_nodes_;
  payload["profile"] = profile_;
  ForecasterIO::write_json_file(dir / "profile.json", payload);
}

std::unique_ptr<SeasonalProfileForecaster> SeasonalProfileForecaster::load(
    const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  const auto stat_name = manifest.at("params").at("stat").get<std::string>();
  auto model = std::make_unique<SeasonalProfileForecaster>(
      stat_name == "mean" ? Stat::mean : Stat::median);
  model->info_ = ForecasterIO::info_from_json(manifest);
  const json payload = ForecasterIO::read_json_file(dir / "profile.json");
  model->node_names_ = payload.at("nodes").get<std::vector<std::string>>();
  model->fallback_nodes_ = payload.at("fallback_nodes").get<std::vector<std::string>>();
  model->profile_ = payload.at("profile").get<std::vector<double>>();
  if (model->profile_.size() != model->node_names_.size() * kNumStates * kBuckets) {
    throw std::runtime_error("seasonal: profile size mismatch in bundle");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Fragments

ForecastPanel merge_fragments(const std::vector<ForecastPanel>& fragments) {
  if (fragments.empty()) throw std::invalid_argument("merge_fragments: nothing to merge");
  ForecastPanel out;
  out.times = fragments[0].times;
  for (const auto& fragment : fragments) {
    if (fragment.times != out.times) {
      throw std::invalid_argument("merge_fragments: fragments disagree on the time axis");
    }
    for (const auto& node : fragment.nodes) {
      if (out.node_index(node) >= 0) {
        throw std::invalid_argument("merge_fragments: node " + node +
                                    " appears in more than one fragment");
      }
      out.nodes.push_back(node);
    }
  }
  out.values.assign(out.n_times() * out.n_nodes(), StateVector{});
  std::size_t offset = 0;
  for (const auto& fragment : fragments) {
    for (std::size_t t = 0; t < out.n_times(); ++t) {
      for (std::size_t n = 0; n < fragment.n_nodes(); ++n) {
        out.at(t, offset + n) = fragment.at(t, n);
      }
    }
    offset += fragment.n_nodes();
  }
  return out;
}

ForecastPanel fill_aggregates(const ForecastPanel& fragment, const Hierarchy& hierarchy) {
  std::vector<int> station_idx(hierarchy.n_stations());
  for (std::size_t s = 0; s < hierarchy.n_stations(); ++s) {
    station_idx[s] = fragment.node_index(hierarchy.stations[s].id);
    if (station_idx[s] < 0) {
      throw std::invalid_argument("fill_aggregates: fragment lacks station " +
                                  hierarchy.stations[s].id);
    }
  }
  std::array<int, kNumAreas> area_idx{};
  for (int a = 0; a < kNumAreas; ++a) {
    area_idx[static_cast<std::size_t>(a)] =
        fragment.node_index(kAreaNames[static_cast<std::size_t>(a)]);
  }
  const int global_idx = fragment.node_index(kGlobalNodeName);

  ForecastPanel out;
  out.nodes = hierarchy.node_names();
  out.times = fragment.times;
  out.values.assign(out.n_times() * out.n_nodes(), StateVector{});
  for (std::size_t t = 0; t < out.n_times(); ++t) {
    for (std::size_t s = 0; s < hierarchy.n_stations(); ++s) {
      out.at(t, s) = fragment.at(t, static_cast<std::size_t>(station_idx[s]));
    }
    StateVector global{};
    for (int a = 0; a < kNumAreas; ++a) {
      StateVector area_value{};
      if (area_idx[static_cast<std::size_t>(a)] >= 0) {
        area_value =
            fragment.at(t, static_cast<std::size_t>(area_idx[static_cast<std::size_t>(a)]));
      } else {
        for (int s : hierarchy.area_members[static_cast<std::size_t>(a)]) {
          area_value += out.at(t, static_cast<std::size_t>(s));
        }
      }
      out.at(t, hierarchy.area_node(static_cast<Area>(a))) = area_value;
      global += area_value;
    }
    out.at(t, hierarchy.global_node()) =
        global_idx >= 0 ? fragment.at(t, static_cast<std::size_t>(global_idx)) : global;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Factory

std::unique_ptr<Forecaster> load_forecaster(const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  const auto kind = manifest.at("kind").get<std::string>();
  if (kind == "seasonal") return SeasonalProfileForecaster::load(dir);
  if (kind == "arima") return ArimaForecaster::load(dir);
  if (kind == "ar_tree") return TreeAutoregForecaster::load(dir);
  if (kind == "classifier") return CategoryClassifierForecaster::load(dir);
  if (kind == "chain") return ChainForecaster::load(dir);
  if (kind == "level_gbt") return LevelRegressorForecaster::load(dir);
  throw std::runtime_error(dir.string() + ": unknown forecaster kind '" + kind + "'");
}

}  // namespace plugcast
