#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddkit/scores.hpp"
#include "ddkit/trajstore.hpp"

namespace ddkit {

enum class Order { ascending, descending };

Order parse_order(const std::string& name);

struct Provenance {
  std::string method;     // "random", "window", "sliding-window", ...
  std::string score_ref;  // score table path or checksum; empty for random
  double start = 0.0;     // window start quantile
  std::uint64_t seed = 0;
};

// Class-balanced selection: every class contributes exactly `ipc` samples.
struct SubsetSpec {
  std::vector<std::string> sample_ids;  // grouped by class, ascending class
  std::vector<std::uint32_t> classes;   // class of each entry in sample_ids
  std::size_t ipc = 0;
  Provenance provenance;
  std::map<std::uint32_t, std::size_t> class_histogram;

  // Throws validation error on imbalance or duplicates.
  void validate() const;
};

SubsetSpec select_random(const TrajectoryTensor& traj, std::size_t ipc, std::uint64_t seed);

// Per class: sort by score in `order` (ties by sample_id ascending) and take
// the contiguous run of length ipc starting at floor(q * (class_size - ipc)).
SubsetSpec select_window(const ScoreTable& scores, const TrajectoryTensor& traj, std::size_t ipc,
                         double start_quantile, Order order = Order::ascending);

// Windows at per-class offsets 0, stride, 2*stride, ... <= class_size - ipc,
// ascending order. With unequal class sizes the number of windows is the
// minimum over classes.
std::vector<SubsetSpec> sliding_window_enumerate(const ScoreTable& scores,
                                                 const TrajectoryTensor& traj, std::size_t ipc,
                                                 std::size_t stride);

// ceil(smallest class size / 20), at least 1.
std::size_t default_stride(const TrajectoryTensor& traj);

struct ParetoInput {
  std::size_t ipc = 0;
  double fraction = 1.0;  // f in (0, 1]
  double accuracy = 0.0;  // in [0, 1]
};

struct ParetoPoint {
  std::size_t ipc = 0;
  double fraction = 1.0;
  double accuracy = 0.0;
  bool is_frontier = false;
};

// Marks the best-accuracy configuration of every ipc; ties go to the smaller f.
std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoInput>& points);

// `sample_id,class` CSV plus provenance sidecar.
void write_subset(const SubsetSpec& subset, const std::filesystem::path& csv);
SubsetSpec read_subset(const std::filesystem::path& csv);

std::vector<ParetoInput> read_pareto_points(const std::filesystem::path& csv);
std::string pareto_csv(const std::vector<ParetoPoint>& points);

}  // namespace ddkit
