#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "commands.hpp"
#include "plugcast/panel.hpp"

namespace plugcast::cli {

Timestamp parse_time_flag(const std::string& text, const std::string& flag) {
  const auto ts = parse_timestamp(text);
  if (!ts) {
    throw std::runtime_error(flag + ": bad datetime '" + text +
                             "' (expected YYYY-MM-DD HH:MM on the 15-minute grid)");
  }
  return *ts;
}

std::vector<Timestamp> intersect_times(std::vector<Timestamp> a, std::vector<Timestamp> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<Timestamp> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Panel select_times(const Panel& panel, const std::vector<Timestamp>& keep) {
  Panel out;
  out.plugs = panel.plugs;
  out.stations = panel.stations;
  out.origin = panel.origin;
  for (std::size_t t = 0; t < panel.n_times(); ++t) {
    if (!std::binary_search(keep.begin(), keep.end(), panel.times[t])) continue;
    out.times.push_back(panel.times[t]);
    for (std::size_t s = 0; s < panel.n_stations(); ++s) {
      out.cells.push_back(panel.cell(t, s));
    }
  }
  return out;
}

ForecastPanel aggregate_truth(const Panel& truth, const std::vector<Timestamp>& times) {
  const Panel sub = select_times(truth, times);
  if (sub.n_times() != times.size()) {
    throw std::runtime_error("truth panel does not cover every requested timestamp");
  }
  return aggregate(sub, Hierarchy(sub.stations));
}

HolidayCalendar holidays_from_flag(const std::string& name) {
  if (name == "none") return HolidayCalendar::none();
  if (name == "french_2020_2021") return HolidayCalendar::french_2020_2021();
  return HolidayCalendar::load(name);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.good()) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace plugcast::cli
