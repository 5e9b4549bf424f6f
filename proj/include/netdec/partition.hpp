#pragma once

#include <string>
#include <vector>

#include "netdec/case.hpp"

namespace netdec {

/// A line with endpoints in two parts. Branch and part indices are 0-based.
struct CutLine {
  int branch;
  int plus_part;   // part holding the from-bus
  int minus_part;  // part holding the to-bus
};

/// Bus-to-part assignment with induced line sets. Parts are 0-based here and
/// 1-based in documents and reports. Only in-service branches enter the line
/// sets.
struct Partition {
  int num_parts = 0;
  std::vector<int> part_of;                  // by bus position
  std::vector<std::vector<int>> part_buses;  // bus positions, ascending
  std::vector<std::vector<int>> part_lines;  // branch indices, ascending
  std::vector<CutLine> cuts;                 // ascending branch index
  std::vector<std::vector<int>> part_cuts;   // indices into `cuts`
  /// Set when the heuristic could not keep every part connected or balanced.
  std::vector<std::string> diagnostics;

  /// Index into `cuts` for a branch, or -1.
  int cut_index(int branch) const;
};

struct PartitionStats {
  std::vector<int> sizes;
  int cut_count = 0;
  int coupling_dimension = 0;
};

/// Greedy BFS partitioner. `seed` picks the bus the farthest-first root
/// search starts from. Throws InvalidK.
Partition partition_greedy(const NetworkCase& c, int K, int seed = 0);

/// `assignment` holds a 0-based part per bus position; every part in
/// [0, max] must be used.
Partition compute_cuts(const NetworkCase& c, const std::vector<int>& assignment);

/// Partition document: {"num_parts": K, "assignment": [{"bus": id, "part": k}, ...]}
/// with 1-based parts. A flat {"<bus id>": part} object is also accepted.
/// Throws MissingBus, UnknownBus, ConfigError.
Partition load_partition(const std::string& document, const NetworkCase& c);
Partition load_partition_file(const std::string& path, const NetworkCase& c);
std::string partition_to_json(const Partition& p, const NetworkCase& c);

PartitionStats partition_stats(const Partition& p);

/// About ten buses per part.
int default_num_parts(const NetworkCase& c);

}  // namespace netdec
