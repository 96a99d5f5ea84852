#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ddkit {

namespace fs = std::filesystem;

inline constexpr double kRowSumTolerance = 1e-4;
inline constexpr int kFormatVersion = 1;

// Per-sample, per-epoch class probabilities plus labels and optional soft
// labels / learning-rate schedule. Layout is row-major [epoch][sample][class].
struct TrajectoryTensor {
  std::size_t num_epochs = 0;
  std::size_t num_samples = 0;
  std::size_t num_classes = 0;
  std::vector<float> probs;
  std::vector<std::uint32_t> labels;
  std::optional<std::vector<float>> teacher_probs;  // [sample][class]
  std::optional<std::vector<float>> lr_schedule;    // [epoch]
  std::vector<std::string> sample_ids;
  std::string manifest_checksum;  // FNV-1a of manifest.json; empty when built in memory

  std::span<const float> row(std::size_t epoch, std::size_t sample) const {
    return {probs.data() + (epoch * num_samples + sample) * num_classes, num_classes};
  }
  std::span<const float> teacher_row(std::size_t sample) const {
    return {teacher_probs->data() + sample * num_classes, num_classes};
  }
  float target_prob(std::size_t epoch, std::size_t sample) const {
    return row(epoch, sample)[labels[sample]];
  }
  std::uint32_t class_of(const std::string& sample_id) const;
  std::optional<std::size_t> index_of(const std::string& sample_id) const;

  // Sample indices per class, ascending.
  std::vector<std::vector<std::size_t>> class_members() const;

  // Throws the matching ErrorKind on the first violated invariant.
  void validate() const;

  // Rebuilds the id lookup; called by loaders and builders.
  void reindex();

private:
  std::unordered_map<std::string, std::size_t> id_index_;
};

// Reads and fully validates a trajectory directory.
TrajectoryTensor load_trajectory(const fs::path& dir);

// Writes `traj` as a trajectory directory (manifest, binaries, ids.txt).
// Returns the manifest checksum.
std::string write_trajectory(const TrajectoryTensor& traj, const fs::path& dir);

enum class Scenario { constant, late_learner, random_walk, sl_clustered };

Scenario parse_scenario(const std::string& name);
const char* to_string(Scenario s);

struct SyntheticSpec {
  std::size_t num_epochs = 1;
  std::size_t num_samples = 1;
  std::size_t num_classes = 2;
  std::uint64_t seed = 0;
  Scenario scenario = Scenario::constant;
};

// Roles assigned by the late-learner scenario. Late learners are exactly
// round(N/10) samples whose target probability is flat until the rise centred
// at two thirds of training. Early learners (20%) oscillate in the first third
// and are stable afterwards. Everything else is constant.
struct SyntheticRoles {
  std::vector<std::size_t> late_learners;
  std::vector<std::size_t> early_learners;
};

SyntheticRoles synthetic_roles(const SyntheticSpec& spec);

TrajectoryTensor make_synthetic(const SyntheticSpec& spec);

// make_synthetic + write_trajectory. Returns `dir`.
fs::path write_synthetic(const SyntheticSpec& spec, const fs::path& dir);

std::string synthetic_sample_id(std::size_t index);

}  // namespace ddkit
