#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plugcast/panel.hpp"

namespace plugcast {

// The 20 ways three plugs can split across four states, as a categorical
// alphabet. Codes are the four counts concatenated in state order
// ("1200" = 1 available, 2 charging), and category indices follow the
// ascending lexicographic order of those code strings.
class CategoryTable {
 public:
  static const CategoryTable& instance();

  std::size_t size() const { return codes_.size(); }
  const std::string& code_at(std::size_t index) const { return codes_[index]; }
  const PlugStateVector& vector_at(std::size_t index) const { return vectors_[index]; }
  std::optional<int> index_of(const PlugStateVector& v) const;
  std::optional<int> index_of_code(std::string_view code) const;

 private:
  CategoryTable();
  std::vector<std::string> codes_;
  std::vector<PlugStateVector> vectors_;
};

struct EncodedState {
  int index = 0;
  std::string code;
};

// Throws std::invalid_argument when the counts are not a valid 3-plug
// split.
EncodedState encode_state(const PlugStateVector& v);
PlugStateVector decode_state(int index);
PlugStateVector decode_state(std::string_view code);

// Scales a nonnegative real 4-vector to sum to `total`, then rounds by
// largest remainder; remainder ties go to the lowest state index. An
// all-zero input splits `total` uniformly before rounding. Throws
// std::invalid_argument on negative or non-finite components.
PlugStateVector round_rescale(const StateVector& p, int total = kPlugsPerStation);

enum class IntegerizeMode {
  rebuild_aggregates,  // round stations, then re-sum areas and global
  per_node,            // round every node against its own plug total
};

// Maps a real-valued full-hierarchy forecast onto integer plug counts.
// rebuild_aggregates keeps the result coherent by construction and is
// the default used by the pipeline.
ForecastPanel integerize(const ForecastPanel& fp, const Hierarchy& hierarchy,
                         IntegerizeMode mode = IntegerizeMode::rebuild_aggregates,
                         int plugs = kPlugsPerStation);

}  // namespace plugcast
