#include <cstdint>
#include <iostream>
#include <memory>

#include "commands.hpp"

namespace plugcast::cli {
namespace {

struct GenerateArgs {
  std::string config_path;
  std::string out_path;
  int stations = 10;
  int days = 60;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void run_generate(const GenerateArgs& a) {
  GeneratorConfig cfg;
  if (!a.config_path.empty()) {
    cfg = GeneratorConfig::load(a.config_path);
  } else {
    cfg.n_stations = a.stations;
    cfg.start = parse_time_flag("2020-07-06 00:00", "preset start");
    cfg.end = cfg.start + static_cast<std::int64_t>(a.days) * kStepsPerDay - 1;
    cfg.changepoint = cfg.start + 2 * (cfg.end - cfg.start) / 3;
  }
  if (a.seed_given) cfg.seed = a.seed;
  cfg.validate();
  const Panel panel = generate(cfg);
  write_panel(panel, a.out_path);
  std::cerr << "generate: " << panel.n_stations() << " stations x " << panel.n_times()
            << " steps, " << panel.missing_count() << " missing cells -> " << a.out_path
            << '\n';
}

struct ImputeArgs {
  std::string in_path;
  std::string out_path;
  std::string report_path;
  std::string strategy = "emw";
  int window = 8;
  int span = 8;
};

void run_impute(const ImputeArgs& a) {
  ImputationStrategy strategy = ImputationStrategy::parse(a.strategy);
  strategy.window = a.window;
  strategy.span = a.span;

  const ReadResult read = read_panel(a.in_path);
  ImputeReport report;
  const Panel filled = impute(read.panel, strategy, &report);
  write_panel(filled, a.out_path);

  const std::string json = report.to_json() + "\n";
  if (a.report_path.empty()) {
    std::cout << json;
  } else {
    write_text(a.report_path, json);
  }
  std::cerr << "impute: filled " << report.cells_filled << " of "
            << report.cells_missing_before << " missing cells, " << report.cells_missing_after
            << " left -> " << a.out_path << '\n';
}

struct SplitArgs {
  std::string in_path;
  std::string spec_path;
  std::string out_dir;
};

void run_split(const SplitArgs& a) {
  const SplitSpec spec = SplitSpec::load(a.spec_path);
  const ReadResult read = read_panel(a.in_path);
  const SplitResult result = make_splits(read.panel, spec);

  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  write_panel(result.train, dir / "train.csv");
  write_time_index(result.public_times, dir / "public.idx");
  write_time_index(result.private_times, dir / "private.idx");
  std::cerr << "split: train " << result.train.n_times() << " steps, public "
            << result.public_times.size() << ", private " << result.private_times.size()
            << " -> " << a.out_dir << '\n';
}

}  // namespace

void register_data_commands(CLI::App& app) {
  auto gen = std::make_shared<GenerateArgs>();
  CLI::App* g = app.add_subcommand("generate", "Write a synthetic station panel CSV");
  g->add_option("--config", gen->config_path, "Generator config JSON (schema plugcast.generator.v1)")
      ->check(CLI::ExistingFile);
  g->add_option("--stations", gen->stations, "Preset station count when no --config is given")
      ->capture_default_str();
  g->add_option("--days", gen->days, "Preset length in days when no --config is given")
      ->capture_default_str();
  CLI::Option* seed = g->add_option("--seed", gen->seed, "Override the config seed");
  g->add_option("--out", gen->out_path, "Output panel CSV")->required();
  g->callback([gen, seed] {
    gen->seed_given = seed->count() > 0;
    run_generate(*gen);
  });

  auto imp = std::make_shared<ImputeArgs>();
  CLI::App* i = app.add_subcommand("impute", "Fill missing station cells");
  i->add_option("--in", imp->in_path, "Input panel CSV")->required()->check(CLI::ExistingFile);
  i->add_option("--strategy", imp->strategy,
                "emw | station_mean | seasonal_median_residual | drop")
      ->capture_default_str();
  i->add_option("--window", imp->window, "Max gap run the moving average fills")
      ->capture_default_str();
  i->add_option("--span", imp->span, "Moving-average span (alpha = 2/(span+1))")
      ->capture_default_str();
  i->add_option("--out", imp->out_path, "Output panel CSV")->required();
  i->add_option("--report", imp->report_path, "Write the JSON report here instead of stdout");
  i->callback([imp] { run_impute(*imp); });

  auto spl = std::make_shared<SplitArgs>();
  CLI::App* s = app.add_subcommand("split", "Carve a panel into train and scoring pools");
  s->add_option("--in", spl->in_path, "Input panel CSV")->required()->check(CLI::ExistingFile);
  s->add_option("--spec", spl->spec_path, "Split spec JSON (schema plugcast.split.v1)")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--out-dir", spl->out_dir, "Directory for train.csv, public.idx, private.idx")
      ->required();
  s->callback([spl] { run_split(*spl); });
}

}  // namespace plugcast::cli
