#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "plugcast/forecasters.hpp"

namespace plugcast {

// Bundle (de)serialization shared by the forecaster families. Each saved
// model is a directory holding manifest.json (kind, training context,
// hyperparameters) plus one or more payload files.
class ForecasterIO {
 public:
  using json = nlohmann::json;

  static json info_to_json(const TrainInfo& info);
  static TrainInfo info_from_json(const json& j);

  static json boost_config_to_json(const BoostConfig& c);
  static BoostConfig boost_config_from_json(const json& j);

  static void write_manifest(const std::filesystem::path& dir, const std::string& kind,
                             const TrainInfo& info, const json& params);
  // Returns the manifest with "kind", "params" and the info fields.
  static json read_manifest(const std::filesystem::path& dir);

  static void write_json_file(const std::filesystem::path& path, const json& j);
  static json read_json_file(const std::filesystem::path& path);

  static json model_to_json(const BoostedModel& m) { return json::parse(m.to_json()); }
  static BoostedModel model_from_json(const json& j) { return BoostedModel::from_json(j.dump()); }
};

namespace fc_detail {

// Shared fit/forecast plumbing.

void require_fitted(const TrainInfo& info, const char* kind);
void require_ascending(std::span<const Timestamp> times, const char* kind);
void require_after_train(std::span<const Timestamp> times, const TrainInfo& info,
                         const char* kind);
void require_complete(const Panel& panel, const char* kind);
std::vector<double> row_weights(const std::vector<double>& time_weights,
                                std::span<const std::size_t> row_time);
void set_info(TrainInfo& info, const Panel& train, const FitOptions& options);

// Calendar feature rows for arbitrary timestamps under a fitted context.
Matrix calendar_matrix(std::span<const Timestamp> times, const TrainInfo& info);

}  // namespace fc_detail

}  // namespace plugcast
