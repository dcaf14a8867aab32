#include "plugcast/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plugcast {

CategoryTable::CategoryTable() {
  std::vector<std::pair<std::string, PlugStateVector>> entries;
  for (int a = 0; a <= kPlugsPerStation; ++a) {
    for (int c = 0; c <= kPlugsPerStation - a; ++c) {
      for (int p = 0; p <= kPlugsPerStation - a - c; ++p) {
        const int o = kPlugsPerStation - a - c - p;
        PlugStateVector v{{a, c, p, o}};
        std::string code;
        for (int k = 0; k < kNumStates; ++k) {
          code += static_cast<char>('0' + v[static_cast<std::size_t>(k)]);
        }
        entries.emplace_back(std::move(code), v);
      }
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [code, v] : entries) {
    codes_.push_back(std::move(code));
    vectors_.push_back(v);
  }
}

const CategoryTable& CategoryTable::instance() {
  static const CategoryTable table;
  return table;
}

std::optional<int> CategoryTable::index_of(const PlugStateVector& v) const {
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    if (vectors_[i] == v) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> CategoryTable::index_of_code(std::string_view code) const {
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i] == code) return static_cast<int>(i);
  }
  return std::nullopt;
}

EncodedState encode_state(const PlugStateVector& v) {
  const auto idx = CategoryTable::instance().index_of(v);
  if (!idx) throw std::invalid_argument("encode_state: not a valid 3-plug split");
  return EncodedState{*idx, CategoryTable::instance().code_at(static_cast<std::size_t>(*idx))};
}

PlugStateVector decode_state(int index) {
  const auto& table = CategoryTable::instance();
  if (index < 0 || static_cast<std::size_t>(index) >= table.size()) {
    throw std::invalid_argument("decode_state: index out of range");
  }
  return table.vector_at(static_cast<std::size_t>(index));
}

PlugStateVector decode_state(std::string_view code) {
  const auto idx = CategoryTable::instance().index_of_code(code);
  if (!idx) throw std::invalid_argument("decode_state: unknown code");
  return decode_state(*idx);
}

PlugStateVector round_rescale(const StateVector& p, int total) {
  if (total < 0) throw std::invalid_argument("round_rescale: negative total");
  StateVector q = p;
  for (int k = 0; k < kNumStates; ++k) {
    const double x = q[static_cast<std::size_t>(k)];
    if (!std::isfinite(x) || x < 0.0) {
      throw std::invalid_argument("round_rescale: components must be finite and nonnegative");
    }
  }
  const double s = q.sum();
  if (s == 0.0) {
    const double u = static_cast<double>(total) / kNumStates;
    for (int k = 0; k < kNumStates; ++k) q[static_cast<std::size_t>(k)] = u;
  } else {
    const double scale = static_cast<double>(total) / s;
    for (int k = 0; k < kNumStates; ++k) q[static_cast<std::size_t>(k)] *= scale;
  }

  PlugStateVector out{};
  std::array<double, kNumStates> remainder{};
  int assigned = 0;
  for (int k = 0; k < kNumStates; ++k) {
    const double floor_k = std::floor(q[static_cast<std::size_t>(k)]);
    out[static_cast<std::size_t>(k)] = static_cast<int>(floor_k);
    remainder[static_cast<std::size_t>(k)] = q[static_cast<std::size_t>(k)] - floor_k;
    assigned += out[static_cast<std::size_t>(k)];
  }
  int leftover = total - assigned;
  // Hand the leftover units to the largest remainders; stable sort keeps
  // equal remainders in state order, so ties go to the lowest index.
  std::array<int, kNumStates> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
  });
  for (int i = 0; i < kNumStates && leftover > 0; ++i, --leftover) {
    out[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] += 1;
  }
  return out;
}

namespace {

// Regression forecasts can dip below zero; counts cannot. Clamp before
// rescaling so integerize accepts any finite forecast, while round_rescale
// itself keeps the strict nonnegative contract.
StateVector clamp_nonneg(StateVector v) {
  for (int k = 0; k < kNumStates; ++k) {
    if (v[static_cast<std::size_t>(k)] < 0.0) v[static_cast<std::size_t>(k)] = 0.0;
  }
  return v;
}

}  // namespace

ForecastPanel integerize(const ForecastPanel& fp, const Hierarchy& hierarchy,
                         IntegerizeMode mode, int plugs) {
  const auto names = hierarchy.node_names();
  std::vector<std::size_t> index(names.size());
  for (std::size_t n = 0; n < names.size(); ++n) {
    const int idx = fp.node_index(names[n]);
    if (idx < 0) throw std::invalid_argument("integerize: panel lacks node " + names[n]);
    index[n] = static_cast<std::size_t>(idx);
  }

  ForecastPanel out;
  out.nodes = names;
  out.times = fp.times;
  out.values.assign(fp.n_times() * names.size(), StateVector{});

  const std::size_t n_stations = hierarchy.n_stations();
  for (std::size_t t = 0; t < fp.n_times(); ++t) {
    if (mode == IntegerizeMode::rebuild_aggregates) {
      StateVector global{};
      for (int a = 0; a < kNumAreas; ++a) {
        StateVector area_sum{};
        for (int s : hierarchy.area_members[static_cast<std::size_t>(a)]) {
          const std::size_t sn = static_cast<std::size_t>(s);
          const StateVector v =
              round_rescale(clamp_nonneg(fp.at(t, index[sn])), plugs).to_real();
          out.at(t, sn) = v;
          area_sum += v;
        }
        out.at(t, hierarchy.area_node(static_cast<Area>(a))) = area_sum;
        global += area_sum;
      }
      out.at(t, hierarchy.global_node()) = global;
    } else {
      for (std::size_t n = 0; n < names.size(); ++n) {
        int node_total = plugs;
        if (n >= n_stations) {
          const std::size_t member_count =
              n == hierarchy.global_node()
                  ? n_stations
                  : hierarchy.area_members[n - n_stations].size();
          node_total = plugs * static_cast<int>(member_count);
        }
        out.at(t, n) = round_rescale(clamp_nonneg(fp.at(t, index[n])), node_total).to_real();
      }
    }
  }
  return out;
}

}  // namespace plugcast
