#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plugcast/ingest.hpp"
#include "plugcast/preprocess.hpp"

namespace plugcast::cli {

void register_data_commands(CLI::App& app);
void register_model_commands(CLI::App& app);
void register_eval_commands(CLI::App& app);

// Shared plumbing used by several subcommands.

// Parses a "YYYY-MM-DD HH:MM[:SS]" flag value or throws naming the flag.
Timestamp parse_time_flag(const std::string& text, const std::string& flag);

// Sorted intersection; inputs need not be sorted.
std::vector<Timestamp> intersect_times(std::vector<Timestamp> a, std::vector<Timestamp> b);

// Rows of `panel` whose timestamp is in `keep` (keep must be ascending).
Panel select_times(const Panel& panel, const std::vector<Timestamp>& keep);

// Station truth restricted to `times` and rolled up to the full node set.
// Throws when the panel lacks one of the times or has missing cells there.
ForecastPanel aggregate_truth(const Panel& truth, const std::vector<Timestamp>& times);

// "none", "french_2020_2021", or a path to a file of YYYY-MM-DD lines.
HolidayCalendar holidays_from_flag(const std::string& name);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace plugcast::cli
