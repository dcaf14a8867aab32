#include "plugcast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "plugcast/rng.hpp"
#include "plugcast/text.hpp"

namespace plugcast {

namespace {

using nlohmann::json;

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json timestamp_json(Timestamp ts) { return format_timestamp(ts); }

Timestamp timestamp_from_json(const json& j, const char* key) {
  const auto text = j.get<std::string>();
  const auto ts = parse_timestamp(text);
  if (!ts) throw std::runtime_error(std::string(key) + ": bad timestamp '" + text + "'");
  return *ts;
}

}  // namespace

std::string IngestReport::to_json() const {
  json j;
  j["rows_read"] = rows_read;
  j["cells_missing"] = cells_missing;
  j["cells_rejected"] = cells_rejected;
  j["rows_duplicate"] = rows_duplicate;
  if (rows_read > 0) {
    j["first_timestamp"] = timestamp_json(first_timestamp);
    j["last_timestamp"] = timestamp_json(last_timestamp);
  } else {
    j["first_timestamp"] = nullptr;
    j["last_timestamp"] = nullptr;
  }
  return j.dump(2) + "\n";
}

ReadResult read_panel(const std::filesystem::path& path, int plugs) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  {
    const auto header = split(trim(line), ',');
    const char* expected[] = {"datetime", "area",  "Station", "Latitude",
                              "Longitude", "tod",  "dow",     "trend",
                              "Available", "Charging", "Passive", "Other"};
    if (header.size() != 12) fail_line(path, 1, "expected 12 columns");
    for (std::size_t i = 0; i < 12; ++i) {
      const auto got = trim(header[i]);
      if (i == 0 && (got == "date" || got == "datetime")) continue;
      if (got != expected[i]) {
        fail_line(path, 1, "unexpected column '" + std::string(got) + "'");
      }
    }
  }

  struct RawRow {
    Timestamp ts;
    int station;
    bool observed;
    bool rejected;
    StateVector value;
  };
  std::vector<RawRow> rows;
  std::vector<StationMeta> stations;
  std::map<std::string, int, std::less<>> station_index;
  std::vector<std::int64_t> time_steps;

  IngestReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto fields = split(stripped, ',');
    if (fields.size() != 12) fail_line(path, line_no, "expected 12 fields");

    const auto ts = parse_timestamp(trim(fields[0]));
    if (!ts) fail_line(path, line_no, "bad or off-grid datetime '" + std::string(trim(fields[0])) + "'");
    const auto area = parse_area(trim(fields[1]));
    if (!area) fail_line(path, line_no, "unknown area '" + std::string(trim(fields[1])) + "'");
    const std::string id{trim(fields[2])};
    if (id.empty()) fail_line(path, line_no, "empty station id");
    const auto lat = parse_double(fields[3]);
    const auto lon = parse_double(fields[4]);
    if (!lat || !lon) fail_line(path, line_no, "bad coordinates");

    int s_idx;
    if (auto it = station_index.find(id); it != station_index.end()) {
      s_idx = it->second;
      const StationMeta& meta = stations[static_cast<std::size_t>(s_idx)];
      if (meta.area != *area) {
        fail_line(path, line_no, "station " + id + " reassigned to another area");
      }
    } else {
      s_idx = static_cast<int>(stations.size());
      stations.push_back(StationMeta{id, *lat, *lon, *area});
      station_index.emplace(id, s_idx);
    }

    RawRow row{*ts, s_idx, false, false, {}};
    int n_empty = 0;
    for (int k = 0; k < kNumStates; ++k) {
      if (trim(fields[static_cast<std::size_t>(8 + k)]).empty()) ++n_empty;
    }
    if (n_empty == 0) {
      StateVector value{};
      for (int k = 0; k < kNumStates; ++k) {
        const auto x = parse_double(fields[static_cast<std::size_t>(8 + k)]);
        if (!x) fail_line(path, line_no, "bad state value");
        value[static_cast<std::size_t>(k)] = *x;
      }
      if (std::fabs(value.sum() - plugs) <= 1e-6) {
        row.observed = true;
        row.value = value;
      } else {
        row.rejected = true;
      }
    } else if (n_empty < kNumStates) {
      row.rejected = true;
    }

    rows.push_back(row);
    time_steps.push_back(ts->step);
    ++report.rows_read;
    if (row.rejected) ++report.cells_rejected;
  }

  std::sort(time_steps.begin(), time_steps.end());
  time_steps.erase(std::unique(time_steps.begin(), time_steps.end()), time_steps.end());

  Panel panel;
  panel.plugs = plugs;
  panel.stations = std::move(stations);
  panel.times.reserve(time_steps.size());
  for (auto s : time_steps) panel.times.push_back(Timestamp{s});
  if (!panel.times.empty()) panel.origin = panel.times.front();
  panel.cells.assign(panel.n_times() * panel.n_stations(), std::nullopt);

  std::vector<char> seen(panel.cells.size(), 0);
  for (const RawRow& row : rows) {
    const auto t_lo = std::lower_bound(time_steps.begin(), time_steps.end(), row.ts.step);
    const std::size_t t = static_cast<std::size_t>(t_lo - time_steps.begin());
    const std::size_t idx = t * panel.n_stations() + static_cast<std::size_t>(row.station);
    if (seen[idx]) {
      ++report.rows_duplicate;
      continue;
    }
    seen[idx] = 1;
    if (row.observed) panel.cells[idx] = row.value;
  }

  report.cells_missing = panel.missing_count();
  if (!panel.times.empty()) {
    report.first_timestamp = panel.times.front();
    report.last_timestamp = panel.times.back();
  }
  return ReadResult{std::move(panel), report};
}

void write_panel(const Panel& panel, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "datetime,area,Station,Latitude,Longitude,tod,dow,trend,Available,Charging,Passive,Other\n";
  std::string buf;
  for (std::size_t t = 0; t < panel.n_times(); ++t) {
    const TimeKey key = panel.key(t);
    const std::string ts_text = format_timestamp(key.ts);
    for (std::size_t s = 0; s < panel.n_stations(); ++s) {
      const StationMeta& st = panel.stations[s];
      buf.clear();
      buf += ts_text;
      buf += ',';
      buf += area_name(st.area);
      buf += ',';
      buf += st.id;
      buf += ',';
      append_double(buf, st.latitude);
      buf += ',';
      append_double(buf, st.longitude);
      buf += ',';
      buf += std::to_string(key.tod);
      buf += ',';
      buf += std::to_string(key.dow);
      buf += ',';
      buf += std::to_string(key.trend);
      const auto& cell = panel.cell(t, s);
      for (int k = 0; k < kNumStates; ++k) {
        buf += ',';
        if (cell.has_value()) append_double(buf, (*cell)[static_cast<std::size_t>(k)]);
      }
      buf += '\n';
      out << buf;
    }
  }
}

void write_forecast_panel(const ForecastPanel& fp, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "datetime,node,state,value\n";
  std::string buf;
  for (std::size_t t = 0; t < fp.n_times(); ++t) {
    const std::string ts_text = format_timestamp(fp.times[t]);
    for (std::size_t n = 0; n < fp.n_nodes(); ++n) {
      for (int k = 0; k < kNumStates; ++k) {
        buf.clear();
        buf += ts_text;
        buf += ',';
        buf += fp.nodes[n];
        buf += ',';
        buf += kStateNames[static_cast<std::size_t>(k)];
        buf += ',';
        append_double(buf, fp.at(t, n)[static_cast<std::size_t>(k)]);
        buf += '\n';
        out << buf;
      }
    }
  }
}

ForecastPanel read_forecast_panel(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (trim(line) != "datetime,node,state,value") {
    fail_line(path, 1, "expected header datetime,node,state,value");
  }

  struct RawRow {
    Timestamp ts;
    int node;
    int state;
    double value;
  };
  std::vector<RawRow> rows;
  std::vector<std::string> nodes;
  std::map<std::string, int, std::less<>> node_index;
  std::vector<std::int64_t> time_steps;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto fields = split(stripped, ',');
    if (fields.size() != 4) fail_line(path, line_no, "expected 4 fields");
    const auto ts = parse_timestamp(trim(fields[0]));
    if (!ts) fail_line(path, line_no, "bad datetime");
    const std::string node{trim(fields[1])};
    if (node.empty()) fail_line(path, line_no, "empty node name");
    const auto state = parse_state(trim(fields[2]));
    if (!state) fail_line(path, line_no, "unknown state '" + std::string(trim(fields[2])) + "'");
    const auto value = parse_double(fields[3]);
    if (!value) fail_line(path, line_no, "bad value");

    int n_idx;
    if (auto it = node_index.find(node); it != node_index.end()) {
      n_idx = it->second;
    } else {
      n_idx = static_cast<int>(nodes.size());
      nodes.push_back(node);
      node_index.emplace(node, n_idx);
    }
    rows.push_back(RawRow{*ts, n_idx, static_cast<int>(*state), *value});
    time_steps.push_back(ts->step);
  }

  std::sort(time_steps.begin(), time_steps.end());
  time_steps.erase(std::unique(time_steps.begin(), time_steps.end()), time_steps.end());

  ForecastPanel fp;
  fp.nodes = std::move(nodes);
  fp.times.reserve(time_steps.size());
  for (auto s : time_steps) fp.times.push_back(Timestamp{s});
  fp.values.assign(fp.n_times() * fp.n_nodes(), StateVector{});

  std::vector<char> seen(fp.values.size() * kNumStates, 0);
  for (const RawRow& row : rows) {
    const auto t_lo = std::lower_bound(time_steps.begin(), time_steps.end(), row.ts.step);
    const std::size_t t = static_cast<std::size_t>(t_lo - time_steps.begin());
    const std::size_t flat =
        (t * fp.n_nodes() + static_cast<std::size_t>(row.node)) * kNumStates +
        static_cast<std::size_t>(row.state);
    if (seen[flat]) {
      throw std::runtime_error(path.string() + ": duplicate entry at " +
                               format_timestamp(row.ts) + " node " +
                               fp.nodes[static_cast<std::size_t>(row.node)]);
    }
    seen[flat] = 1;
    fp.at(t, static_cast<std::size_t>(row.node))[static_cast<std::size_t>(row.state)] =
        row.value;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw std::runtime_error(path.string() + ": incomplete grid, missing entries");
    }
  }
  return fp;
}

void write_time_index(const std::vector<Timestamp>& times, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (Timestamp ts : times) out << format_timestamp(ts) << '\n';
}

std::vector<Timestamp> read_time_index(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Timestamp> times;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto ts = parse_timestamp(stripped);
    if (!ts) fail_line(path, line_no, "bad timestamp");
    times.push_back(*ts);
  }
  return times;
}

void SplitSpec::resolve_defaults() {
  const std::int64_t len = test_end - test_start + 1;
  if (middle_start.step == 0) middle_start = test_start + len / 3;
  if (middle_end.step == 0) middle_end = test_start + 2 * len / 3;
}

void SplitSpec::validate() const {
  if (train_start > train_end) throw std::runtime_error("split: train_start after train_end");
  if (test_start > test_end) throw std::runtime_error("split: test_start after test_end");
  if (train_end >= test_start) throw std::runtime_error("split: train overlaps test");
  if (middle_start < test_start || middle_end < middle_start ||
      middle_end > test_end + 1) {
    throw std::runtime_error("split: period boundaries outside test range");
  }
  if (!(public_middle_fraction >= 0.0 && public_middle_fraction <= 1.0)) {
    throw std::runtime_error("split: public_middle_fraction outside [0,1]");
  }
}

std::string SplitSpec::to_json() const {
  json j;
  j["schema"] = "plugcast.split.v1";
  j["train_start"] = timestamp_json(train_start);
  j["train_end"] = timestamp_json(train_end);
  j["test_start"] = timestamp_json(test_start);
  j["test_end"] = timestamp_json(test_end);
  j["middle_start"] = timestamp_json(middle_start);
  j["middle_end"] = timestamp_json(middle_end);
  j["public_middle_fraction"] = public_middle_fraction;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

SplitSpec SplitSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.contains("schema") && j["schema"].get<std::string>() != "plugcast.split.v1") {
    throw std::runtime_error("split: unknown schema " + j["schema"].get<std::string>());
  }
  SplitSpec spec;
  spec.train_start = timestamp_from_json(j.at("train_start"), "train_start");
  spec.train_end = timestamp_from_json(j.at("train_end"), "train_end");
  spec.test_start = timestamp_from_json(j.at("test_start"), "test_start");
  spec.test_end = timestamp_from_json(j.at("test_end"), "test_end");
  if (j.contains("middle_start") && !j["middle_start"].is_null()) {
    spec.middle_start = timestamp_from_json(j["middle_start"], "middle_start");
  }
  if (j.contains("middle_end") && !j["middle_end"].is_null()) {
    spec.middle_end = timestamp_from_json(j["middle_end"], "middle_end");
  }
  if (j.contains("public_middle_fraction")) {
    spec.public_middle_fraction = j["public_middle_fraction"].get<double>();
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  spec.resolve_defaults();
  spec.validate();
  return spec;
}

SplitSpec SplitSpec::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

namespace {

Panel sub_panel(const Panel& panel, std::size_t t_begin, std::size_t t_end) {
  Panel out;
  out.plugs = panel.plugs;
  out.stations = panel.stations;
  out.origin = panel.origin;
  out.times.assign(panel.times.begin() + static_cast<std::ptrdiff_t>(t_begin),
                   panel.times.begin() + static_cast<std::ptrdiff_t>(t_end));
  out.cells.assign(panel.cells.begin() + static_cast<std::ptrdiff_t>(t_begin * panel.n_stations()),
                   panel.cells.begin() + static_cast<std::ptrdiff_t>(t_end * panel.n_stations()));
  return out;
}

std::size_t first_time_at_or_after(const std::vector<Timestamp>& times, Timestamp ts) {
  return static_cast<std::size_t>(
      std::lower_bound(times.begin(), times.end(), ts,
                       [](Timestamp a, Timestamp b) { return a < b; }) -
      times.begin());
}

}  // namespace

SplitResult make_splits(const Panel& panel, const SplitSpec& spec) {
  spec.validate();
  const std::size_t train_lo = first_time_at_or_after(panel.times, spec.train_start);
  const std::size_t train_hi = first_time_at_or_after(panel.times, spec.train_end + 1);
  const std::size_t test_lo = first_time_at_or_after(panel.times, spec.test_start);
  const std::size_t mid_lo = first_time_at_or_after(panel.times, spec.middle_start);
  const std::size_t mid_hi = first_time_at_or_after(panel.times, spec.middle_end);
  const std::size_t test_hi = first_time_at_or_after(panel.times, spec.test_end + 1);

  SplitResult result;
  result.train = sub_panel(panel, train_lo, train_hi);

  // Period 1 is public outright; the public share of period 2 is a seeded
  // uniform draw of floor(fraction * |period 2|) timestamps.
  std::vector<std::size_t> middle(mid_hi - mid_lo);
  for (std::size_t i = 0; i < middle.size(); ++i) middle[i] = mid_lo + i;
  Rng rng(spec.seed);
  rng.shuffle(middle);
  const std::size_t k =
      static_cast<std::size_t>(spec.public_middle_fraction * static_cast<double>(middle.size()));

  std::vector<char> is_public_middle(middle.size(), 0);
  for (std::size_t i = 0; i < k; ++i) is_public_middle[middle[i] - mid_lo] = 1;

  for (std::size_t t = test_lo; t < mid_lo; ++t) result.public_times.push_back(panel.times[t]);
  for (std::size_t t = mid_lo; t < mid_hi; ++t) {
    if (is_public_middle[t - mid_lo]) {
      result.public_times.push_back(panel.times[t]);
    } else {
      result.private_times.push_back(panel.times[t]);
    }
  }
  for (std::size_t t = mid_hi; t < test_hi; ++t) result.private_times.push_back(panel.times[t]);
  return result;
}

std::pair<Panel, Panel> benchmark_split(const Panel& panel, double train_fraction) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("benchmark_split: fraction outside [0,1]");
  }
  const std::size_t n_train = static_cast<std::size_t>(
      train_fraction * static_cast<double>(panel.n_times()));
  return {sub_panel(panel, 0, n_train), sub_panel(panel, n_train, panel.n_times())};
}

GeneratorConfig::GeneratorConfig()
    : transition{{{0.90, 0.06, 0.03, 0.01},
                  {0.10, 0.85, 0.04, 0.01},
                  {0.08, 0.05, 0.85, 0.02},
                  {0.15, 0.03, 0.02, 0.80}}} {}

void GeneratorConfig::validate() const {
  if (n_stations < 1) throw std::runtime_error("generator: n_stations < 1");
  if (plugs < 1) throw std::runtime_error("generator: plugs < 1");
  if (start > end) throw std::runtime_error("generator: start after end");
  if (changepoint < start || changepoint > end) {
    throw std::runtime_error("generator: changepoint outside [start, end]");
  }
  for (const auto& row : transition) {
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw std::runtime_error("generator: negative transition probability");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw std::runtime_error("generator: transition row does not sum to 1");
    }
  }
  if (!(malfunction_probability >= 0.0 && malfunction_probability <= 1.0) ||
      !(missing_rate_after_changepoint >= 0.0 && missing_rate_after_changepoint <= 1.0)) {
    throw std::runtime_error("generator: probability outside [0,1]");
  }
}

std::string GeneratorConfig::to_json() const {
  json j;
  j["schema"] = "plugcast.generator.v1";
  j["n_stations"] = n_stations;
  j["plugs"] = plugs;
  j["start"] = timestamp_json(start);
  j["end"] = timestamp_json(end);
  j["transition"] = transition;
  j["tod_amplitude"] = tod_amplitude;
  j["dow_amplitude"] = dow_amplitude;
  j["malfunction_probability"] = malfunction_probability;
  j["changepoint"] = timestamp_json(changepoint);
  j["missing_rate_after_changepoint"] = missing_rate_after_changepoint;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.contains("schema") && j["schema"].get<std::string>() != "plugcast.generator.v1") {
    throw std::runtime_error("generator: unknown schema " + j["schema"].get<std::string>());
  }
  GeneratorConfig cfg;
  if (j.contains("n_stations")) cfg.n_stations = j["n_stations"].get<int>();
  if (j.contains("plugs")) cfg.plugs = j["plugs"].get<int>();
  cfg.start = timestamp_from_json(j.at("start"), "start");
  cfg.end = timestamp_from_json(j.at("end"), "end");
  if (j.contains("transition")) {
    cfg.transition = j["transition"].get<std::array<std::array<double, 4>, 4>>();
  }
  if (j.contains("tod_amplitude")) cfg.tod_amplitude = j["tod_amplitude"].get<double>();
  if (j.contains("dow_amplitude")) cfg.dow_amplitude = j["dow_amplitude"].get<double>();
  if (j.contains("malfunction_probability")) {
    cfg.malfunction_probability = j["malfunction_probability"].get<double>();
  }
  if (j.contains("changepoint") && !j["changepoint"].is_null()) {
    cfg.changepoint = timestamp_from_json(j["changepoint"], "changepoint");
  } else {
    cfg.changepoint = cfg.start + 2 * (cfg.end - cfg.start) / 3;
  }
  if (j.contains("missing_rate_after_changepoint")) {
    cfg.missing_rate_after_changepoint = j["missing_rate_after_changepoint"].get<double>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

GeneratorConfig GeneratorConfig::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace plugcast
