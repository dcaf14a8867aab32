// End-to-end checks of the command-line pipeline. The binary under test is
// passed as argv[1]; each case drives it through std::system with scratch
// files in a per-case temp directory.
#define DOCTEST_CONFIG_IMPLEMENT
#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "plugcast/ensemble.hpp"
#include "plugcast/ingest.hpp"
#include "plugcast/panel.hpp"
#include "plugcast/time.hpp"
#include "test_util.hpp"

using namespace plugcast;

namespace {

std::string g_binary;

struct CliResult {
  int exit_code = -1;
  std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
  static std::atomic<int> counter{0};
  const int id = counter.fetch_add(1);
  const auto err_path = dir.file("stderr_" + std::to_string(id) + ".txt");
  const auto out_path = dir.file("stdout_" + std::to_string(id) + ".txt");
  const std::string cmd = "'" + g_binary + "' " + args + " >'" + out_path.string() + "' 2>'" +
                          err_path.string() + "'";
  const int raw = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.err = read_file(err_path);
  return result;
}

// Frozen-panel generator config: identity transitions pin every plug to its
// initial state, and nothing goes missing.
std::string identity_config(int stations, const std::string& end, unsigned seed) {
  return std::string(R"({"schema":"plugcast.generator.v1","n_stations":)") +
         std::to_string(stations) +
         R"(,"start":"2020-07-06 00:00","end":")" + end +
         R"(","transition":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],)" +
         R"("malfunction_probability":0,"missing_rate_after_changepoint":0,"seed":)" +
         std::to_string(seed) + "}";
}

bool integral_triplet(const StateVector& v) {
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (v[k] != std::round(v[k]) || v[k] < 0.0) return false;
    sum += v[k];
  }
  return sum == 3.0;
}

}  // namespace

TEST_CASE("usage errors exit nonzero and help exits zero") {
  TempDir dir;
  CHECK(run_cli(dir, "--help").exit_code == 0);
  CHECK(run_cli(dir, "").exit_code != 0);
  CHECK(run_cli(dir, "frobnicate").exit_code != 0);
  // Required flag missing.
  CHECK(run_cli(dir, "generate --stations 3").exit_code != 0);
  const CliResult bad_model =
      run_cli(dir, "train --model kalman --in missing.csv --out x");
  CHECK(bad_model.exit_code != 0);
}

TEST_CASE("generate is reproducible per seed") {
  TempDir dir;
  const auto a = dir.file("a.csv");
  const auto b = dir.file("b.csv");
  const auto c = dir.file("c.csv");
  REQUIRE(run_cli(dir, "generate --stations 4 --days 3 --seed 7 --out " + a.string()).exit_code ==
          0);
  REQUIRE(run_cli(dir, "generate --stations 4 --days 3 --seed 7 --out " + b.string()).exit_code ==
          0);
  REQUIRE(run_cli(dir, "generate --stations 4 --days 3 --seed 8 --out " + c.string()).exit_code ==
          0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a) != read_file(c));

  const ReadResult read = read_panel(a);
  CHECK(read.panel.n_stations() == 4);
  CHECK(read.panel.n_times() == 3 * 96);
}

TEST_CASE("frozen panel scores exactly zero through the whole pipeline") {
  TempDir dir;
  const auto cfg = dir.file("gen.json");
  write_file(cfg, identity_config(4, "2020-07-12 23:45", 3));
  const auto truth = dir.file("truth.csv");
  REQUIRE(run_cli(dir, "generate --config " + cfg.string() + " --out " + truth.string())
              .exit_code == 0);
  const ReadResult read = read_panel(truth);
  REQUIRE(read.panel.missing_count() == 0);

  const auto bundle = dir.file("seasonal");
  REQUIRE(run_cli(dir, "train --model seasonal_median --in " + truth.string() + " --out " +
                           bundle.string())
              .exit_code == 0);

  const auto times = dir.file("times.idx");
  write_time_index(read.panel.times, times);
  const auto pred = dir.file("pred.csv");
  REQUIRE(run_cli(dir, "predict --model " + bundle.string() + " --times " + times.string() +
                           " --out " + pred.string())
              .exit_code == 0);
  const ForecastPanel fp = read_forecast_panel(pred);
  CHECK(fp.n_nodes() == 4 + 4 + 1);  // stations, areas, global

  const auto report = dir.file("report.json");
  REQUIRE(run_cli(dir, "evaluate --truth " + truth.string() + " --pred " + pred.string() +
                           " --bootstrap 0 --out " + report.string())
              .exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(report));
  CHECK(j.at("sum").at("total").get<double>() == 0.0);
  CHECK(j.at("mean").at("total").get<double>() == 0.0);
  CHECK(j.at("n_timestamps").get<std::size_t>() == read.panel.n_times());
}

TEST_CASE("split emits a train panel and disjoint scoring pools") {
  TempDir dir;
  const auto panel_path = dir.file("panel.csv");
  REQUIRE(run_cli(dir, "generate --stations 3 --days 10 --seed 5 --out " + panel_path.string())
              .exit_code == 0);
  const auto spec = dir.file("spec.json");
  write_file(spec, R"({"schema":"plugcast.split.v1",
    "train_start":"2020-07-06 00:00","train_end":"2020-07-09 23:45",
    "test_start":"2020-07-10 00:00","test_end":"2020-07-15 23:45",
    "public_middle_fraction":0.25,"seed":9})");
  const auto out_dir = dir.file("splits");
  REQUIRE(run_cli(dir, "split --in " + panel_path.string() + " --spec " + spec.string() +
                           " --out-dir " + out_dir.string())
              .exit_code == 0);

  const ReadResult train = read_panel(out_dir / "train.csv");
  CHECK(train.panel.n_times() == 4 * 96);
  CHECK(train.panel.times.front() == *parse_timestamp("2020-07-06 00:00"));

  const auto public_times = read_time_index(out_dir / "public.idx");
  const auto private_times = read_time_index(out_dir / "private.idx");
  // Thirds of the 6-day test window: 192 + floor(0.25 * 192) public.
  CHECK(public_times.size() == 240);
  CHECK(private_times.size() == 336);
  std::vector<Timestamp> all = public_times;
  all.insert(all.end(), private_times.begin(), private_times.end());
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());  // disjoint
  REQUIRE(all.size() == 576);
  CHECK(all.front() == *parse_timestamp("2020-07-10 00:00"));
  CHECK(all.back() == *parse_timestamp("2020-07-15 23:45"));
}

TEST_CASE("impute drop strategy removes incomplete timestamps") {
  TempDir dir;
  const auto panel_path = dir.file("panel.csv");
  // Preset generator defaults leave missing cells after the changepoint.
  REQUIRE(run_cli(dir, "generate --stations 5 --days 6 --seed 11 --out " + panel_path.string())
              .exit_code == 0);
  const ReadResult before = read_panel(panel_path);
  REQUIRE(before.panel.missing_count() > 0);

  const auto out = dir.file("dropped.csv");
  const auto report = dir.file("report.json");
  REQUIRE(run_cli(dir, "impute --strategy drop --in " + panel_path.string() + " --out " +
                           out.string() + " --report " + report.string())
              .exit_code == 0);
  const ReadResult after = read_panel(out);
  CHECK(after.panel.missing_count() == 0);
  CHECK(after.panel.n_times() < before.panel.n_times());

  const nlohmann::json j = nlohmann::json::parse(read_file(report));
  CHECK(j.at("cells_missing_after").get<int>() == 0);
  CHECK(j.at("timestamps_dropped").get<std::size_t>() ==
        before.panel.n_times() - after.panel.n_times());

  const auto filled = dir.file("filled.csv");
  REQUIRE(run_cli(dir, "impute --strategy emw --window 96 --span 8 --in " + panel_path.string() +
                           " --out " + filled.string())
              .exit_code == 0);
  CHECK(read_panel(filled).panel.n_times() == before.panel.n_times());

  CHECK(run_cli(dir, "impute --strategy nearest --in " + panel_path.string() + " --out " +
                         dir.file("x.csv").string())
            .exit_code != 0);
}

TEST_CASE("postprocess snaps a fractional forecast onto whole plugs") {
  TempDir dir;
  const auto panel_path = dir.file("panel.csv");
  REQUIRE(run_cli(dir, "generate --stations 4 --days 7 --seed 2 --out " + panel_path.string())
              .exit_code == 0);

  const auto bundle = dir.file("seasonal_mean");
  REQUIRE(run_cli(dir, "train --model seasonal_mean --in " + panel_path.string() + " --out " +
                           bundle.string())
              .exit_code == 0);
  const ReadResult read = read_panel(panel_path);
  const auto times = dir.file("times.idx");
  write_time_index(read.panel.times, times);
  const auto pred = dir.file("pred.csv");
  REQUIRE(run_cli(dir, "predict --model " + bundle.string() + " --times " + times.string() +
                           " --out " + pred.string())
              .exit_code == 0);

  const auto snapped = dir.file("snapped.csv");
  REQUIRE(run_cli(dir, "postprocess --in " + pred.string() + " --hierarchy-from " +
                           panel_path.string() + " --out " + snapped.string())
              .exit_code == 0);
  const ForecastPanel out = read_forecast_panel(snapped);
  const Hierarchy hierarchy(read.panel.stations);
  REQUIRE(out.nodes == hierarchy.node_names());
  for (std::size_t t = 0; t < out.n_times(); ++t) {
    for (std::size_t s = 0; s < read.panel.n_stations(); ++s) {
      REQUIRE(integral_triplet(out.at(t, s)));
    }
  }
  CHECK(coherence_check(out, hierarchy).pass);
}

TEST_CASE("predict merges fragments and can skip the bottom-up fill") {
  TempDir dir;
  const auto cfg = dir.file("gen.json");
  write_file(cfg, identity_config(4, "2020-07-09 23:45", 21));
  const auto truth = dir.file("truth.csv");
  REQUIRE(run_cli(dir, "generate --config " + cfg.string() + " --out " + truth.string())
              .exit_code == 0);

  const auto bundle = dir.file("ar");
  REQUIRE(run_cli(dir, "train --model ar_tree --rounds 2 --depth 2 --n-lags 2 --in " +
                           truth.string() + " --out " + bundle.string())
              .exit_code == 0);

  const ReadResult read = read_panel(truth);
  std::vector<Timestamp> future;
  for (int i = 1; i <= 8; ++i) future.push_back(read.panel.times.back() + i);
  const auto times = dir.file("future.idx");
  write_time_index(future, times);

  const auto fragment = dir.file("fragment.csv");
  REQUIRE(run_cli(dir, "predict --no-fill --model " + bundle.string() + " --times " +
                           times.string() + " --out " + fragment.string())
              .exit_code == 0);
  CHECK(read_forecast_panel(fragment).n_nodes() == 4);

  const auto full = dir.file("full.csv");
  REQUIRE(run_cli(dir, "predict --model " + bundle.string() + " --times " + times.string() +
                           " --out " + full.string())
              .exit_code == 0);
  const ForecastPanel fp = read_forecast_panel(full);
  CHECK(fp.n_nodes() == 9);
  // The filled aggregates are exact member sums.
  const Hierarchy hierarchy(read.panel.stations);
  CHECK(coherence_check(fp, hierarchy).pass);
}

TEST_CASE("aggregate validates weights and writes mlpol traces") {
  TempDir dir;
  auto stations = std::vector<StationMeta>{make_station("st_1", Area::south),
                                           make_station("st_2", Area::north)};
  Panel truth = make_panel(stations, *parse_timestamp("2020-07-06 00:00"), 20,
                           [](std::size_t t, std::size_t) {
                             const double a = static_cast<double>(t % 4);
                             return StateVector{{a, 3.0 - a, 0.0, 0.0}};
                           });
  const auto truth_path = dir.file("truth.csv");
  write_panel(truth, truth_path);

  const Hierarchy hierarchy(truth.stations);
  const ForecastPanel exact = aggregate(truth, hierarchy);
  ForecastPanel biased = exact;
  for (auto& v : biased.values) v[0] += 0.5;
  const auto e1 = dir.file("expert_exact.csv");
  const auto e2 = dir.file("expert_biased.csv");
  write_forecast_panel(exact, e1);
  write_forecast_panel(biased, e2);

  const auto out = dir.file("combined.csv");
  const CliResult bad = run_cli(dir, "aggregate --method fixed --weights 0.5,0.6 --preds " +
                                         e1.string() + " " + e2.string() + " --out " +
                                         out.string());
  CHECK(bad.exit_code != 0);
  CHECK(bad.err.find("weights must sum to 1") != std::string::npos);

  REQUIRE(run_cli(dir, "aggregate --method fixed --weights 0.25,0.75 --preds " + e1.string() +
                           " " + e2.string() + " --out " + out.string())
              .exit_code == 0);
  const ForecastPanel mixed = read_forecast_panel(out);
  REQUIRE(mixed.values.size() == exact.values.size());
  for (std::size_t i = 0; i < mixed.values.size(); ++i) {
    CHECK(mixed.values[i][0] ==
          doctest::Approx(exact.values[i][0] + 0.75 * 0.5).epsilon(1e-9));
  }

  const auto trace = dir.file("trace.csv");
  const auto online = dir.file("online.csv");
  REQUIRE(run_cli(dir, "aggregate --method mlpol --mode online --truth " + truth_path.string() +
                           " --preds " + e1.string() + " " + e2.string() + " --trace " +
                           trace.string() + " --out " + online.string())
              .exit_code == 0);
  const std::string trace_text = read_file(trace);
  CHECK(trace_text.rfind("timestamp,node,state,expert,weight\n", 0) == 0);
  CHECK(read_forecast_panel(online).n_nodes() == 7);

  // Trace output is tied to mlpol.
  CHECK(run_cli(dir, "aggregate --method uniform --preds " + e1.string() + " " + e2.string() +
                         " --trace " + trace.string() + " --out " + out.string())
            .exit_code != 0);
}

TEST_CASE("leaderboard ranks the exact expert first") {
  TempDir dir;
  auto stations = std::vector<StationMeta>{make_station("st_1", Area::south)};
  Panel truth = make_panel(stations, *parse_timestamp("2020-07-06 00:00"), 12,
                           [](std::size_t t, std::size_t) {
                             const double a = static_cast<double>(t % 3);
                             return StateVector{{a, 3.0 - a, 0.0, 0.0}};
                           });
  const auto truth_path = dir.file("truth.csv");
  write_panel(truth, truth_path);
  const Hierarchy hierarchy(truth.stations);
  const ForecastPanel exact = aggregate(truth, hierarchy);
  ForecastPanel off = exact;
  for (auto& v : off.values) v[1] += 2.0;
  const auto good = dir.file("good.csv");
  const auto bad = dir.file("way_off.csv");
  write_forecast_panel(exact, good);
  write_forecast_panel(off, bad);

  const auto table = dir.file("table.txt");
  const auto rows = dir.file("rows.json");
  REQUIRE(run_cli(dir, "leaderboard --truth " + truth_path.string() + " --preds " + bad.string() +
                           " " + good.string() + " --out " + table.string() + " --json " +
                           rows.string())
              .exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(rows));
  REQUIRE(j.size() == 2);
  CHECK(j[0].at("model").get<std::string>() == "good");
  CHECK(j[0].at("total").get<double>() == 0.0);
  CHECK(j[1].at("model").get<std::string>() == "way_off");
  const std::string text = read_file(table);
  CHECK(text.find("good") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <plugcast-binary> [doctest args]\n", argv[0]);
    return 2;
  }
  g_binary = argv[1];
  doctest::Context context(1, argv);
  return context.run();
}
