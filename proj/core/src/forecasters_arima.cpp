#include <algorithm>

#include "forecaster_detail.hpp"
#include "plugcast/parallel.hpp"

namespace plugcast {

using json = nlohmann::json;

void ArimaForecaster::fit(const Panel& train, const FitOptions& options) {
  fc_detail::require_complete(train, "arima");
  fc_detail::set_info(info_, train, options);

  const std::size_t n_stations = train.n_stations();
  const std::size_t n_t = train.n_times();
  params_.assign(n_stations * kNumStates, ArimaParams{});
  states_.assign(n_stations * kNumStates, SeriesState{});

  parallel_for(n_stations * kNumStates, options.jobs, [&](std::size_t idx) {
    const std::size_t s = idx / kNumStates;
    const std::size_t k = idx % kNumStates;
    std::vector<double> series(n_t);
    for (std::size_t t = 0; t < n_t; ++t) {
      series[t] = (*train.cell(t, s))[k];
    }
    const std::vector<double> smoothed = rolling_smooth(series, smooth_window_);
    ArimaParams params = fit_arima(smoothed, p_, d_, q_);
    SeriesState state;
    const ArimaState tail = arima_state(params, smoothed);
    state.w_tail = tail.w_tail;
    state.e_tail = tail.e_tail;
    state.level_tail = tail.level_tail;
    params_[idx] = std::move(params);
    states_[idx] = std::move(state);
  });
}

ForecastPanel ArimaForecaster::forecast(std::span<const Timestamp> times) const {
  fc_detail::require_fitted(info_, "arima");
  fc_detail::require_ascending(times, "arima");
  fc_detail::require_after_train(times, info_, "arima");

  const int horizon = static_cast<int>(times.back() - info_.train_end);
  ForecastPanel fp;
  for (const auto& st : info_.stations) fp.nodes.push_back(st.id);
  fp.times.assign(times.begin(), times.end());
  fp.values.assign(times.size() * fp.n_nodes(), StateVector{});

  for (std::size_t s = 0; s < info_.stations.size(); ++s) {
    for (int k = 0; k < kNumStates; ++k) {
      const std::size_t idx = s * kNumStates + static_cast<std::size_t>(k);
      ArimaState state;
      state.w_tail = states_[idx].w_tail;
      state.e_tail = states_[idx].e_tail;
      state.level_tail = states_[idx].level_tail;
      const std::vector<double> path =
          arima_forecast_from(params_[idx], std::move(state), horizon);
      for (std::size_t t = 0; t < times.size(); ++t) {
        const auto offset = static_cast<std::size_t>(times[t] - info_.train_end) - 1;
        fp.at(t, s)[static_cast<std::size_t>(k)] = path[offset];
      }
    }
  }
  return fp;
}

bool ArimaForecaster::all_converged() const {
  for (const auto& p : params_) {
    if (!p.converged) return false;
  }
  return true;
}

void ArimaForecaster::save(const std::filesystem::path& dir) const {
  fc_detail::require_fitted(info_, "arima");
  ForecasterIO::write_manifest(
      dir, kind(), info_,
      json{{"p", p_}, {"d", d_}, {"q", q_}, {"smooth_window", smooth_window_}});
  json models = json::array();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const ArimaParams& p = params_[i];
    const SeriesState& st = states_[i];
    models.push_back(json{{"phi", p.phi},
                          {"theta", p.theta},
                          {"intercept", p.intercept},
                          {"css", p.css},
                          {"converged", p.converged},
                          {"w_tail", st.w_tail},
                          {"e_tail", st.e_tail},
                          {"level_tail", st.level_tail}});
  }
  ForecasterIO::write_json_file(dir / "arima.json", json{{"models", std::move(models)}});
}

std::unique_ptr<ArimaForecaster> ArimaForecaster::load(const std::filesystem::path& dir) {
  const json manifest = ForecasterIO::read_manifest(dir);
  const json& params = manifest.at("params");
  auto model = std::make_unique<ArimaForecaster>(
      params.at("p").get<int>(), params.at("d").get<int>(), params.at("q").get<int>(),
      params.at("smooth_window").get<int>());
  model->info_ = ForecasterIO::info_from_json(manifest);

  const json payload = ForecasterIO::read_json_file(dir / "arima.json");
  for (const json& m : payload.at("models")) {
    ArimaParams p;
    p.p = model->p_;
    p.d = model->d_;
    p.q = model->q_;
    p.phi = m.at("phi").get<std::vector<double>>();
    p.theta = m.at("theta").get<std::vector<double>>();
    p.intercept = m.at("intercept").get<double>();
    p.css = m.value("css", 0.0);
    p.converged = m.at("converged").get<bool>();
    SeriesState st;
    st.w_tail = m.at("w_tail").get<std::vector<double>>();
    st.e_tail = m.at("e_tail").get<std::vector<double>>();
    st.level_tail = m.at("level_tail").get<std::vector<double>>();
    model->params_.push_back(std::move(p));
    model->states_.push_back(std::move(st));
  }
  if (model->params_.size() != model->info_.stations.size() * kNumStates) {
    throw std::runtime_error("arima: bundle model count mismatch");
  }
  return model;
}

}  // namespace plugcast
