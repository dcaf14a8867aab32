#include "plugcast/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "plugcast/text.hpp"

namespace plugcast {

void ExpertSet::validate() const {
  if (panels.empty()) throw std::invalid_argument("experts: empty set");
  if (names.size() != panels.size()) {
    throw std::invalid_argument("experts: name and panel counts differ");
  }
  for (std::size_t k = 1; k < panels.size(); ++k) {
    if (panels[k].nodes != panels[0].nodes) {
      throw std::invalid_argument("experts: node lists differ between panels");
    }
    if (panels[k].times != panels[0].times) {
      throw std::invalid_argument("experts: time axes differ between panels");
    }
  }
}

ForecastPanel uniform_average(const ExpertSet& experts) {
  experts.validate();
  std::vector<double> weights(experts.size(), 1.0 / static_cast<double>(experts.size()));
  return fixed_weight_average(experts, weights);
}

ForecastPanel fixed_weight_average(const ExpertSet& experts, std::span<const double> weights) {
  experts.validate();
  if (weights.size() != experts.size()) {
    throw std::invalid_argument("fixed_weight_average: weight count mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("fixed_weight_average: negative weight");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("fixed_weight_average: weights must sum to 1");
  }

  ForecastPanel out;
  out.nodes = experts.panels[0].nodes;
  out.times = experts.panels[0].times;
  out.values.assign(out.n_times() * out.n_nodes(), StateVector{});
  for (std::size_t k = 0; k < experts.size(); ++k) {
    const double w = weights[k];
    const auto& values = experts.panels[k].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t s = 0; s < kNumStates; ++s) out.values[i][s] += w * values[i][s];
    }
  }
  return out;
}

void MlpolState::reset(std::size_t n_experts) {
  cum_regret.assign(n_experts, 0.0);
  cum_sq_regret.assign(n_experts, 0.0);
  weights.assign(n_experts, n_experts > 0 ? 1.0 / static_cast<double>(n_experts) : 0.0);
}

double mlpol_step(MlpolState& state, std::span<const double> expert_predictions, double truth) {
  const std::size_t k_count = state.weights.size();
  if (expert_predictions.size() != k_count) {
    throw std::invalid_argument("mlpol_step: prediction count mismatch");
  }
  if (!std::isfinite(truth)) throw std::invalid_argument("mlpol_step: non-finite truth");
  double pred = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!std::isfinite(expert_predictions[k])) {
      throw std::invalid_argument("mlpol_step: non-finite expert prediction");
    }
    pred += state.weights[k] * expert_predictions[k];
  }

  const double own_loss = std::fabs(pred - truth);
  double weight_mass = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double regret = own_loss - std::fabs(expert_predictions[k] - truth);
    state.cum_regret[k] += regret;
    state.cum_sq_regret[k] += regret * regret;
    const double eta = 1.0 / (1.0 + state.cum_sq_regret[k]);
    state.weights[k] = eta * std::max(state.cum_regret[k], 0.0);
    weight_mass += state.weights[k];
  }
  if (weight_mass > 0.0) {
    for (double& w : state.weights) w /= weight_mass;
  } else {
    for (double& w : state.weights) w = 1.0 / static_cast<double>(k_count);
  }
  return pred;
}

void WeightTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "timestamp,node,state,expert,weight\n";
  std::string buf;
  for (const auto& row : rows) {
    buf.clear();
    buf += format_timestamp(row.ts);
    buf += ',';
    buf += row.node;
    buf += ',';
    buf += kStateNames[static_cast<std::size_t>(row.state)];
    buf += ',';
    buf += row.expert;
    buf += ',';
    append_double(buf, row.weight);
    buf += '\n';
    out << buf;
  }
}

namespace {

// Map each expert node onto the hierarchy implied by the truth panel.
std::vector<std::size_t> node_mapping(const std::vector<std::string>& expert_nodes,
                                      const Panel& truth, const Hierarchy& hierarchy) {
  std::vector<std::size_t> mapping(expert_nodes.size());
  for (std::size_t n = 0; n < expert_nodes.size(); ++n) {
    const std::string& name = expert_nodes[n];
    if (name == kGlobalNodeName) {
      mapping[n] = hierarchy.global_node();
    } else if (const auto area = parse_area(name)) {
      mapping[n] = hierarchy.area_node(*area);
    } else {
      const int s = truth.station_index(name);
      if (s < 0) {
        throw std::invalid_argument("mlpol_aggregate: truth panel lacks node " + name);
      }
      mapping[n] = static_cast<std::size_t>(s);
    }
  }
  return mapping;
}

}  // namespace

AggregationResult mlpol_aggregate(const ExpertSet& experts, const Panel& truth,
                                  AggregationMode mode,
                                  std::span<const Timestamp> fit_times) {
  experts.validate();
  const ForecastPanel& first = experts.panels[0];
  const Hierarchy hierarchy(truth.stations);
  const std::vector<std::size_t> mapping = node_mapping(first.nodes, truth, hierarchy);

  std::unordered_map<std::int64_t, std::size_t> truth_time;
  truth_time.reserve(truth.n_times());
  for (std::size_t t = 0; t < truth.n_times(); ++t) truth_time.emplace(truth.times[t].step, t);

  const std::size_t n_nodes = first.n_nodes();
  const std::size_t k_count = experts.size();
  std::vector<MlpolState> states(n_nodes * kNumStates, MlpolState(k_count));

  AggregationResult result;
  result.panel.nodes = first.nodes;
  result.panel.times = first.times;
  result.panel.values.assign(first.n_times() * n_nodes, StateVector{});

  std::vector<double> preds(k_count);

  const auto trace_instance = [&](Timestamp ts, std::size_t node, int state_k,
                                  const MlpolState& st) {
    for (std::size_t k = 0; k < k_count; ++k) {
      result.trace.rows.push_back(
          WeightTraceRow{ts, first.nodes[node], state_k, experts.names[k], st.weights[k]});
    }
  };

  // One pass over a timestamp that exists in the truth panel: update every
  // instance whose hierarchy node is fully observed there.
  const auto update_at = [&](std::size_t expert_t, std::size_t truth_t) {
    const auto node_values = aggregate_partial(truth, hierarchy, truth_t);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      const auto& tv = node_values[mapping[n]];
      if (!tv.has_value()) continue;
      for (int k = 0; k < kNumStates; ++k) {
        MlpolState& st = states[n * kNumStates + static_cast<std::size_t>(k)];
        for (std::size_t e = 0; e < k_count; ++e) {
          preds[e] = experts.panels[e].at(expert_t, n)[static_cast<std::size_t>(k)];
        }
        mlpol_step(st, preds, (*tv)[static_cast<std::size_t>(k)]);
        trace_instance(first.times[expert_t], n, k, st);
      }
    }
  };

  const auto predict_at = [&](std::size_t expert_t) {
    for (std::size_t n = 0; n < n_nodes; ++n) {
      StateVector v{};
      for (int k = 0; k < kNumStates; ++k) {
        const MlpolState& st = states[n * kNumStates + static_cast<std::size_t>(k)];
        double p = 0.0;
        for (std::size_t e = 0; e < k_count; ++e) {
          p += st.weights[e] *
               experts.panels[e].at(expert_t, n)[static_cast<std::size_t>(k)];
        }
        v[static_cast<std::size_t>(k)] = p;
      }
      result.panel.at(expert_t, n) = v;
    }
  };

  if (mode == AggregationMode::online) {
    for (std::size_t t = 0; t < first.n_times(); ++t) {
      predict_at(t);  // prediction strictly precedes the update
      if (const auto it = truth_time.find(first.times[t].step); it != truth_time.end()) {
        update_at(t, it->second);
      }
    }
  } else {
    for (Timestamp ts : fit_times) {
      const int expert_t = first.time_index(ts);
      const auto it = truth_time.find(ts.step);
      if (expert_t < 0 || it == truth_time.end()) {
        throw std::invalid_argument("mlpol_aggregate: fit window timestamp " +
                                    format_timestamp(ts) +
                                    " not covered by experts and truth");
      }
      update_at(static_cast<std::size_t>(expert_t), it->second);
    }
    for (std::size_t t = 0; t < first.n_times(); ++t) predict_at(t);
  }
  return result;
}

}  // namespace plugcast
