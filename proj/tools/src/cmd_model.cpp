#include <iostream>
#include <memory>

#include "commands.hpp"
#include "plugcast/forecasters.hpp"
#include "plugcast/postprocess.hpp"
#include "plugcast/text.hpp"

namespace plugcast::cli {
namespace {

struct TrainArgs {
  std::string model;
  std::string in_path;
  std::string out_dir;
  std::string level;
  std::string loss = "equal";
  double tau_days = 30.0;
  std::string t_max;
  std::string holidays = "none";
  int rounds = 0;  // 0 means the per-model default
  int depth = 6;
  double learning_rate = 0.1;
  double min_samples_leaf = 5.0;
  double l2_leaf = 1.0;
  int n_lags = 20;
  int smooth_steps = 10;
  int ar_p = 2;
  int ar_d = 1;
  int ar_q = 1;
  std::string chain_order = "0,1,2,3";
  int jobs = 1;
};

// Accepts "0,1,2,3" or the compact state letters "acpo".
std::array<int, kNumStates> parse_chain_order(const std::string& text) {
  std::array<int, kNumStates> order{};
  if (text.find(',') != std::string::npos) {
    const auto parts = split(text, ',');
    if (parts.size() != kNumStates) {
      throw std::runtime_error("--chain-order: expected four comma-separated state indices");
    }
    for (int k = 0; k < kNumStates; ++k) {
      const auto v = parse_int(parts[static_cast<std::size_t>(k)]);
      if (!v) throw std::runtime_error("--chain-order: bad index '" +
                                       std::string(parts[static_cast<std::size_t>(k)]) + "'");
      order[static_cast<std::size_t>(k)] = static_cast<int>(*v);
    }
    return order;
  }
  if (text.size() != kNumStates) {
    throw std::runtime_error("--chain-order: expected four letters from {a,c,p,o}");
  }
  const std::string letters = "acpo";
  for (int k = 0; k < kNumStates; ++k) {
    const auto pos = letters.find(text[static_cast<std::size_t>(k)]);
    if (pos == std::string::npos) {
      throw std::runtime_error("--chain-order: bad state letter '" +
                               std::string(1, text[static_cast<std::size_t>(k)]) + "'");
    }
    order[static_cast<std::size_t>(k)] = static_cast<int>(pos);
  }
  return order;
}

HierarchyLevel level_for(const TrainArgs& a, HierarchyLevel fallback) {
  return a.level.empty() ? fallback : parse_level(a.level);
}

void run_train(const TrainArgs& a) {
  const ReadResult read = read_panel(a.in_path);
  const Panel& train = read.panel;

  FitOptions options;
  options.jobs = a.jobs;
  options.holidays = holidays_from_flag(a.holidays);
  if (a.loss == "exp") {
    const Timestamp t_max =
        a.t_max.empty() ? train.times.back() : parse_time_flag(a.t_max, "--t-max");
    options.weights = exp_weights(train.times, a.tau_days, t_max);
  } else if (a.loss != "equal") {
    throw std::runtime_error("train: unknown --loss '" + a.loss + "' (equal | exp)");
  }

  BoostConfig cfg;
  cfg.rounds = a.rounds > 0 ? a.rounds : (a.model == "classifier" ? 300 : 100);
  cfg.max_depth = a.depth;
  cfg.learning_rate = a.learning_rate;
  cfg.min_samples_leaf = a.min_samples_leaf;
  cfg.l2_leaf = a.l2_leaf;

  std::unique_ptr<Forecaster> model;
  if (a.model == "seasonal_median") {
    model = std::make_unique<SeasonalProfileForecaster>(SeasonalProfileForecaster::Stat::median);
  } else if (a.model == "seasonal_mean") {
    model = std::make_unique<SeasonalProfileForecaster>(SeasonalProfileForecaster::Stat::mean);
  } else if (a.model == "arima") {
    model = std::make_unique<ArimaForecaster>(a.ar_p, a.ar_d, a.ar_q, a.smooth_steps);
  } else if (a.model == "ar_tree") {
    model = std::make_unique<TreeAutoregForecaster>(a.n_lags, cfg);
  } else if (a.model == "classifier") {
    model = std::make_unique<CategoryClassifierForecaster>(cfg);
  } else if (a.model == "chain") {
    model = std::make_unique<ChainForecaster>(level_for(a, HierarchyLevel::area),
                                              parse_chain_order(a.chain_order), cfg);
  } else if (a.model == "level_gbt") {
    model = std::make_unique<LevelRegressorForecaster>(level_for(a, HierarchyLevel::station), cfg);
  } else {
    throw std::runtime_error(
        "train: unknown --model '" + a.model +
        "' (seasonal_median | seasonal_mean | arima | ar_tree | classifier | chain | level_gbt)");
  }
  if (!a.level.empty() && a.model != "chain" && a.model != "level_gbt") {
    throw std::runtime_error("train: --level applies to chain and level_gbt only");
  }

  model->fit(train, options);
  model->save(a.out_dir);
  if (a.model == "arima" &&
      !static_cast<const ArimaForecaster*>(model.get())->all_converged()) {
    std::cerr << "train: warning: some series stopped before the tolerance was met\n";
  }
  std::cerr << "train: " << model->kind() << ", " << model->model_count() << " models on "
            << train.n_stations() << " stations x " << train.n_times() << " steps -> "
            << a.out_dir << '\n';
}

struct PredictArgs {
  std::vector<std::string> model_dirs;
  std::string times_path;
  std::string out_path;
  bool no_fill = false;
};

void run_predict(const PredictArgs& a) {
  const std::vector<Timestamp> times = read_time_index(a.times_path);

  std::vector<ForecastPanel> fragments;
  std::vector<StationMeta> stations;
  for (const auto& dir : a.model_dirs) {
    const auto model = load_forecaster(dir);
    if (fragments.empty()) stations = model->info().stations;
    fragments.push_back(model->forecast(times));
  }
  ForecastPanel merged = merge_fragments(fragments);

  const Hierarchy hierarchy(stations);
  bool all_stations = true;
  for (const auto& st : stations) {
    if (merged.node_index(st.id) < 0) {
      all_stations = false;
      break;
    }
  }
  const bool filled = all_stations && !a.no_fill && merged.n_nodes() < hierarchy.n_nodes();
  if (filled) merged = fill_aggregates(merged, hierarchy);

  write_forecast_panel(merged, a.out_path);
  std::cerr << "predict: " << merged.n_nodes() << " nodes x " << merged.n_times() << " steps"
            << (filled ? " (aggregates filled bottom-up)" : "") << " -> " << a.out_path << '\n';
}

struct PostprocessArgs {
  std::string in_path;
  std::string hierarchy_from;
  std::string out_path;
  std::string mode = "rebuild";
};

void run_postprocess(const PostprocessArgs& a) {
  const ForecastPanel fp = read_forecast_panel(a.in_path);
  const ReadResult read = read_panel(a.hierarchy_from);
  const Hierarchy hierarchy(read.panel.stations);

  IntegerizeMode mode;
  if (a.mode == "rebuild") {
    mode = IntegerizeMode::rebuild_aggregates;
  } else if (a.mode == "per-node") {
    mode = IntegerizeMode::per_node;
  } else {
    throw std::runtime_error("postprocess: unknown --mode '" + a.mode +
                             "' (rebuild | per-node)");
  }

  const ForecastPanel out = integerize(fp, hierarchy, mode, read.panel.plugs);
  write_forecast_panel(out, a.out_path);

  const CoherenceReport coherence = coherence_check(out, hierarchy);
  std::cerr << "postprocess: " << out.n_nodes() << " nodes x " << out.n_times() << " steps, "
            << (coherence.pass ? "coherent" : "NOT coherent") << " (max area dev "
            << format_double(coherence.max_area_deviation) << ") -> " << a.out_path << '\n';
}

}  // namespace

void register_model_commands(CLI::App& app) {
  auto tr = std::make_shared<TrainArgs>();
  CLI::App* t = app.add_subcommand("train", "Fit a forecaster and save its bundle");
  t->add_option("--model", tr->model,
                "seasonal_median | seasonal_mean | arima | ar_tree | classifier | chain | "
                "level_gbt")
      ->required();
  t->add_option("--in", tr->in_path, "Training panel CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr->out_dir, "Output bundle directory")->required();
  t->add_option("--level", tr->level,
                "Hierarchy level for chain (default area) and level_gbt (default station)");
  t->add_option("--loss", tr->loss, "equal | exp (recency-weighted samples)")
      ->capture_default_str();
  t->add_option("--tau-days", tr->tau_days, "Decay constant for --loss exp, in days")
      ->capture_default_str();
  t->add_option("--t-max", tr->t_max,
                "Reference datetime for --loss exp (default: last training timestamp)");
  t->add_option("--holidays", tr->holidays,
                "none | french_2020_2021 | path to YYYY-MM-DD lines")
      ->capture_default_str();
  t->add_option("--rounds", tr->rounds,
                "Boosting rounds (default 100; classifier defaults to 300)");
  t->add_option("--depth", tr->depth, "Tree depth limit")->capture_default_str();
  t->add_option("--learning-rate", tr->learning_rate, "Shrinkage per round")
      ->capture_default_str();
  t->add_option("--min-samples-leaf", tr->min_samples_leaf,
                "Minimum weight sum per split side")
      ->capture_default_str();
  t->add_option("--l2-leaf", tr->l2_leaf, "L2 penalty on leaf values")->capture_default_str();
  t->add_option("--n-lags", tr->n_lags, "Autoregressive lag count (ar_tree)")
      ->capture_default_str();
  t->add_option("--smooth-steps", tr->smooth_steps, "Trailing-mean window before arima fits")
      ->capture_default_str();
  t->add_option("--p", tr->ar_p, "Autoregressive order (arima)")->capture_default_str();
  t->add_option("--d", tr->ar_d, "Differencing order (arima)")->capture_default_str();
  t->add_option("--q", tr->ar_q, "Moving-average order (arima)")->capture_default_str();
  t->add_option("--chain-order", tr->chain_order, "State order for chain, e.g. 0,1,2,3 or acpo")
      ->capture_default_str();
  t->add_option("--jobs", tr->jobs, "Threads for independent per-series fits")
      ->capture_default_str();
  t->callback([tr] { run_train(*tr); });

  auto pr = std::make_shared<PredictArgs>();
  CLI::App* p = app.add_subcommand("predict", "Forecast from one or more saved bundles");
  p->add_option("--model", pr->model_dirs, "Bundle directory (repeat to merge fragments)")
      ->required();
  p->add_option("--times", pr->times_path, "Timestamp index file to forecast")
      ->required()
      ->check(CLI::ExistingFile);
  p->add_option("--out", pr->out_path, "Output forecast CSV")->required();
  p->add_flag("--no-fill", pr->no_fill, "Keep the merged fragment as is; skip bottom-up fill");
  p->callback([pr] { run_predict(*pr); });

  auto po = std::make_shared<PostprocessArgs>();
  CLI::App* q = app.add_subcommand("postprocess", "Integerize a forecast onto plug counts");
  q->add_option("--in", po->in_path, "Forecast CSV")->required()->check(CLI::ExistingFile);
  q->add_option("--hierarchy-from", po->hierarchy_from,
                "Panel CSV whose station metadata defines the hierarchy")
      ->required()
      ->check(CLI::ExistingFile);
  q->add_option("--out", po->out_path, "Output forecast CSV")->required();
  q->add_option("--mode", po->mode, "rebuild | per-node")->capture_default_str();
  q->callback([po] { run_postprocess(*po); });
}

}  // namespace plugcast::cli
