#include <algorithm>
#include <cmath>
#include <cstdio>

#include "plugcast/ingest.hpp"
#include "plugcast/rng.hpp"

namespace plugcast {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Occupancy pressure over the day: -1 at midnight, +1 at noon.
double daytime_factor(int tod) {
  return std::sin(kTwoPi * (static_cast<double>(tod) / kStepsPerDay - 0.25));
}

}  // namespace

Panel generate(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);

  Panel panel;
  panel.plugs = config.plugs;
  panel.origin = config.start;
  const std::int64_t n_steps = config.end - config.start + 1;
  panel.times.reserve(static_cast<std::size_t>(n_steps));
  for (std::int64_t i = 0; i < n_steps; ++i) panel.times.push_back(config.start + i);

  struct StationSim {
    bool locked = false;
    int lock_state = 0;
    Timestamp lock_onset{};
    std::vector<int> plug_state;
  };
  std::vector<StationSim> sims(static_cast<std::size_t>(config.n_stations));

  for (int s = 0; s < config.n_stations; ++s) {
    StationMeta meta;
    char id[16];
    std::snprintf(id, sizeof id, "st_%03d", s + 1);
    meta.id = id;
    meta.area = static_cast<Area>(s % kNumAreas);
    meta.latitude = 48.80 + rng.uniform() * 0.12;
    meta.longitude = 2.25 + rng.uniform() * 0.20;
    panel.stations.push_back(meta);

    StationSim& sim = sims[static_cast<std::size_t>(s)];
    sim.locked = rng.uniform() < config.malfunction_probability;
    sim.lock_state = rng.uniform() < 0.5 ? static_cast<int>(PlugState::available)
                                         : static_cast<int>(PlugState::other);
    // Faults set in before the change point so missingness starts on a
    // station already stuck.
    sim.lock_onset = config.start + rng.below(config.changepoint - config.start + 1);
    sim.plug_state.resize(static_cast<std::size_t>(config.plugs));
    const double initial[kNumStates] = {0.55, 0.25, 0.15, 0.05};
    for (int p = 0; p < config.plugs; ++p) {
      sim.plug_state[static_cast<std::size_t>(p)] = rng.categorical(initial);
    }
  }

  panel.cells.assign(panel.n_times() * panel.n_stations(), std::nullopt);
  for (std::size_t t = 0; t < panel.n_times(); ++t) {
    const Timestamp ts = panel.times[t];
    const int tod = time_of_day(ts);
    const int dow = day_of_week(ts);
    const double weekend = dow >= 6 ? 1.0 : 0.0;
    // Charging demand rises during the day and drops on weekends;
    // availability moves opposite. Identity transition rows are left
    // exactly fixed by the renormalization.
    const double m = std::exp(config.tod_amplitude * daytime_factor(tod) -
                              config.dow_amplitude * weekend);
    for (std::size_t s = 0; s < panel.n_stations(); ++s) {
      StationSim& sim = sims[s];
      const bool locked_now = sim.locked && ts >= sim.lock_onset;
      PlugStateVector counts{};
      if (locked_now) {
        counts[static_cast<std::size_t>(sim.lock_state)] = config.plugs;
      } else {
        for (int p = 0; p < config.plugs; ++p) {
          const int cur = sim.plug_state[static_cast<std::size_t>(p)];
          double row[kNumStates];
          for (int k = 0; k < kNumStates; ++k) {
            row[k] = config.transition[static_cast<std::size_t>(cur)][static_cast<std::size_t>(k)];
          }
          row[static_cast<int>(PlugState::charging)] *= m;
          row[static_cast<int>(PlugState::available)] /= m;
          const int next = rng.categorical(row);
          sim.plug_state[static_cast<std::size_t>(p)] = next;
          counts[static_cast<std::size_t>(next)] += 1;
        }
      }
      const bool drop = ts >= config.changepoint && locked_now &&
                        rng.uniform() < config.missing_rate_after_changepoint;
      if (!drop) panel.cell(t, s) = counts.to_real();
    }
  }
  return panel;
}

}  // namespace plugcast
