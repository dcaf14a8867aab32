#include <iostream>
#include <memory>

#include "commands.hpp"
#include "json.hpp"
#include "plugcast/ensemble.hpp"
#include "plugcast/eval.hpp"

namespace plugcast::cli {
namespace {

struct EvaluateArgs {
  std::string truth_path;
  std::string pred_path;
  std::string subset_path;
  std::string out_path;
  int bootstrap = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

void run_evaluate(const EvaluateArgs& a) {
  const ReadResult read = read_panel(a.truth_path);
  const ForecastPanel pred = read_forecast_panel(a.pred_path);

  std::vector<Timestamp> target = intersect_times(read.panel.times, pred.times);
  if (!a.subset_path.empty()) {
    target = intersect_times(std::move(target), read_time_index(a.subset_path));
  }
  if (target.empty()) throw std::runtime_error("evaluate: no overlapping timestamps to score");

  const ForecastPanel truth_fp = aggregate_truth(read.panel, target);
  const ScoreReport report = hierarchical_loss(truth_fp, restrict_times(pred, target));

  nlohmann::json j = nlohmann::json::parse(report.to_json());
  if (a.bootstrap > 0) {
    const BootstrapInterval ci = bootstrap_ci(report.per_timestamp, a.bootstrap, a.level, a.seed);
    j["bootstrap"] = nlohmann::json{{"point", ci.point}, {"low", ci.low},
                                    {"high", ci.high},   {"resamples", a.bootstrap},
                                    {"level", a.level},  {"seed", a.seed}};
  }
  const std::string text = j.dump(2) + "\n";
  if (a.out_path.empty()) {
    std::cout << text;
  } else {
    write_text(a.out_path, text);
  }
  std::cerr << report.to_text();
}

struct AggregateArgs {
  std::vector<std::string> pred_paths;
  std::string method = "uniform";
  std::vector<double> weights;
  std::string truth_path;
  std::string mode = "freeze";
  std::string fit_times_path;
  std::string trace_path;
  std::string out_path;
};

void run_aggregate(const AggregateArgs& a) {
  if (!a.trace_path.empty() && a.method != "mlpol") {
    throw std::runtime_error("aggregate: --trace is only written by --method mlpol");
  }

  ExpertSet experts;
  for (const auto& path : a.pred_paths) {
    experts.names.push_back(std::filesystem::path(path).stem().string());
    experts.panels.push_back(read_forecast_panel(path));
  }
  experts.validate();

  ForecastPanel result;
  if (a.method == "uniform") {
    result = uniform_average(experts);
  } else if (a.method == "fixed") {
    if (a.weights.empty()) {
      throw std::runtime_error("aggregate: --method fixed requires --weights");
    }
    result = fixed_weight_average(experts, a.weights);
  } else if (a.method == "mlpol") {
    if (a.truth_path.empty()) {
      throw std::runtime_error("aggregate: --method mlpol requires --truth");
    }
    AggregationMode mode;
    if (a.mode == "online") {
      mode = AggregationMode::online;
    } else if (a.mode == "freeze") {
      mode = AggregationMode::fit_then_freeze;
    } else {
      throw std::runtime_error("aggregate: unknown --mode '" + a.mode + "' (online | freeze)");
    }
    const ReadResult read = read_panel(a.truth_path);
    std::vector<Timestamp> fit_times;
    if (!a.fit_times_path.empty()) {
      if (mode == AggregationMode::online) {
        throw std::runtime_error("aggregate: --fit-times applies to --mode freeze only");
      }
      fit_times = read_time_index(a.fit_times_path);
    } else if (mode == AggregationMode::fit_then_freeze) {
      fit_times = intersect_times(read.panel.times, experts.panels.front().times);
    }
    AggregationResult agg = mlpol_aggregate(experts, read.panel, mode, fit_times);
    result = std::move(agg.panel);
    if (!a.trace_path.empty()) agg.trace.write_csv(a.trace_path);
  } else {
    throw std::runtime_error("aggregate: unknown --method '" + a.method +
                             "' (uniform | fixed | mlpol)");
  }

  write_forecast_panel(result, a.out_path);
  std::cerr << "aggregate: " << a.method << " over " << experts.size() << " experts -> "
            << a.out_path << '\n';
}

struct LeaderboardArgs {
  std::string truth_path;
  std::vector<std::string> pred_paths;
  std::string subset_path;
  std::string out_path;
  std::string json_path;
};

void run_leaderboard(const LeaderboardArgs& a) {
  const ReadResult read = read_panel(a.truth_path);

  std::vector<LeaderboardEntry> entries;
  std::vector<Timestamp> target = read.panel.times;
  for (const auto& path : a.pred_paths) {
    entries.push_back({std::filesystem::path(path).stem().string(), read_forecast_panel(path)});
    target = intersect_times(std::move(target), entries.back().panel.times);
  }
  if (!a.subset_path.empty()) {
    target = intersect_times(std::move(target), read_time_index(a.subset_path));
  }
  if (target.empty()) throw std::runtime_error("leaderboard: no overlapping timestamps");

  const ForecastPanel truth_fp = aggregate_truth(read.panel, target);
  for (auto& e : entries) e.panel = restrict_times(e.panel, target);

  const auto rows = leaderboard(entries, truth_fp);
  const std::string text = leaderboard_to_text(rows);
  if (a.out_path.empty()) {
    std::cout << text;
  } else {
    write_text(a.out_path, text);
  }
  if (!a.json_path.empty()) write_text(a.json_path, leaderboard_to_json(rows) + "\n");
  std::cerr << "leaderboard: " << rows.size() << " models over " << target.size()
            << " timestamps\n";
}

}  // namespace

void register_eval_commands(CLI::App& app) {
  auto ev = std::make_shared<EvaluateArgs>();
  CLI::App* e = app.add_subcommand("evaluate", "Score a forecast against station truth");
  e->add_option("--truth", ev->truth_path, "Truth panel CSV")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--pred", ev->pred_path, "Forecast CSV")->required()->check(CLI::ExistingFile);
  e->add_option("--subset", ev->subset_path, "Restrict scoring to this timestamp index")
      ->check(CLI::ExistingFile);
  e->add_option("--bootstrap", ev->bootstrap, "Bootstrap resamples for the mean total (0 = off)")
      ->capture_default_str();
  e->add_option("--level", ev->level, "Bootstrap confidence level")->capture_default_str();
  e->add_option("--seed", ev->seed, "Bootstrap seed")->capture_default_str();
  e->add_option("--out", ev->out_path, "Write the JSON report here instead of stdout");
  e->callback([ev] { run_evaluate(*ev); });

  auto ag = std::make_shared<AggregateArgs>();
  CLI::App* g = app.add_subcommand("aggregate", "Combine expert forecasts");
  g->add_option("--preds", ag->pred_paths, "Expert forecast CSVs")
      ->required()
      ->check(CLI::ExistingFile);
  g->add_option("--method", ag->method, "uniform | fixed | mlpol")->capture_default_str();
  g->add_option("--weights", ag->weights, "Fixed convex weights, e.g. 0.35,0.25,0.4")
      ->delimiter(',');
  g->add_option("--truth", ag->truth_path, "Truth panel CSV (mlpol)")->check(CLI::ExistingFile);
  g->add_option("--mode", ag->mode, "mlpol weight schedule: online | freeze")
      ->capture_default_str();
  g->add_option("--fit-times", ag->fit_times_path,
                "Timestamp index replayed to learn frozen weights")
      ->check(CLI::ExistingFile);
  g->add_option("--trace", ag->trace_path, "Write the mlpol weight trace CSV here");
  g->add_option("--out", ag->out_path, "Output forecast CSV")->required();
  g->callback([ag] { run_aggregate(*ag); });

  auto lb = std::make_shared<LeaderboardArgs>();
  CLI::App* l = app.add_subcommand("leaderboard", "Rank forecasts by mean hierarchical loss");
  l->add_option("--truth", lb->truth_path, "Truth panel CSV")
      ->required()
      ->check(CLI::ExistingFile);
  l->add_option("--preds", lb->pred_paths, "Forecast CSVs to rank")
      ->required()
      ->check(CLI::ExistingFile);
  l->add_option("--subset", lb->subset_path, "Restrict scoring to this timestamp index")
      ->check(CLI::ExistingFile);
  l->add_option("--out", lb->out_path, "Write the table here instead of stdout");
  l->add_option("--json", lb->json_path, "Also write the rows as JSON");
  l->callback([lb] { run_leaderboard(*lb); });
}

}  // namespace plugcast::cli
