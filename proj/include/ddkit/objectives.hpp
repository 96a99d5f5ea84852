#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ddkit {

inline constexpr double kTmDenominatorEpsilon = 1e-12;

// Flattened model parameters at one epoch tag.
struct ParamVector {
  long long tag = 0;
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

// ||theta_hat - theta_tM||^2 / ||theta_t - theta_tM||^2.
double tm_loss(const ParamVector& theta_t, const ParamVector& theta_tM,
               const ParamVector& theta_hat);

struct ExpertSegment {
  ParamVector start;   // theta_t
  ParamVector target;  // theta_{t+M}
};

// Mean of tm_loss over aligned (expert segment, student endpoint) pairs.
double tm_loss_averaged(const std::vector<ExpertSegment>& experts,
                        const std::vector<ParamVector>& student_endpoints);

struct LayerStat {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> running_mean;
  std::vector<double> running_var;
};

using LayerStats = std::vector<LayerStat>;

// sum_l ||mu_l - RM_l|| + lambda_var * sum_l ||var_l - RV_l||. With
// `squared`, both norms are squared.
double bn_matching_loss(const LayerStats& stats, double lambda_var, bool squared = false);

enum class Side { real, synthetic };

struct FeatureBatch {
  std::vector<std::vector<double>> embeddings;  // [n][d]
  Side side = Side::real;
  std::string model_tag;         // v
  std::string augmentation_tag;  // omega
};

// Mean over (v, omega) pairs of ||mean(real) - mean(syn)||^2.
double dm_loss(const std::vector<FeatureBatch>& real, const std::vector<FeatureBatch>& syn);

struct GradVector {
  std::vector<std::vector<double>> layers;
  Side side = Side::real;
  std::string tag;
};

// Layerwise cosine distance sum_l (1 - cos), averaged over tag-aligned pairs.
double dc_loss(const std::vector<GradVector>& real, const std::vector<GradVector>& syn);

// File formats.
ParamVector read_param_file(const std::filesystem::path& file, long long tag = 0);
void write_param_file(const ParamVector& v, const std::filesystem::path& file);

struct ParamIndexEntry {
  long long tag = 0;
  std::string file;
  std::size_t dim = 0;
};

// {"vectors": [{"tag": t, "file": "theta_<t>.bin", "dim": d}, ...]}
std::vector<ParamIndexEntry> read_param_index(const std::filesystem::path& index);
void write_param_index(const std::vector<ParamIndexEntry>& entries,
                       const std::filesystem::path& index);
// Reads the vector with `tag` from an index; checks the declared dim.
ParamVector load_indexed_param(const std::filesystem::path& index, long long tag);

LayerStats read_layer_stats(const std::filesystem::path& json);
// Splits the batches of one file by side.
std::pair<std::vector<FeatureBatch>, std::vector<FeatureBatch>> read_feature_batches(
    const std::filesystem::path& json);
std::pair<std::vector<GradVector>, std::vector<GradVector>> read_grad_vectors(
    const std::filesystem::path& json);

}  // namespace ddkit
