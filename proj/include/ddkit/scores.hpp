#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddkit/trajstore.hpp"

namespace ddkit {

enum class ScoreMethod { el2n, el2n_sl, forgetting, dyn_unc, cad };

ScoreMethod parse_score_method(const std::string& name);
const char* to_string(ScoreMethod m);

// One scalar per sample for a single (method, config) pair. Scores are in
// trajectory sample order.
struct ScoreTable {
  std::optional<ScoreMethod> method;  // unset when read from a bare CSV
  std::map<std::string, double> config;
  std::vector<std::string> sample_ids;
  std::vector<double> scores;
  std::string source_manifest_checksum;

  double at(const std::string& sample_id) const;
  std::map<std::string, double> as_map() const;
};

// Inclusive epoch range [first, last].
struct EpochRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct ScoreParams {
  double temperature = 1.0;  // T
  std::size_t window = 6;    // J, epochs per uncertainty window
  std::size_t width = 2;     // W, trailing windows averaged by CAD
  std::size_t budget = 0;    // K, compute-matched epochs

  // Throws validation error unless T > 0, J >= 2, W >= 1, K <= E and K-J-W >= 0.
  void validate(std::size_t num_epochs) const;
};

enum class CadBase { el2n, target_prob };

CadBase parse_cad_base(const std::string& name);

// Per-epoch ||p - onehot(y)||_2 for one sample over epochs [0, num_epochs).
std::vector<double> el2n_series(const TrajectoryTensor& traj, std::size_t sample,
                                std::size_t num_epochs);
std::vector<double> target_prob_series(const TrajectoryTensor& traj, std::size_t sample,
                                       std::size_t num_epochs);

ScoreTable el2n(const TrajectoryTensor& traj, std::optional<EpochRange> range = std::nullopt,
                unsigned jobs = 1);

ScoreTable el2n_sl(const TrajectoryTensor& traj, double temperature,
                   std::optional<EpochRange> range = std::nullopt, unsigned jobs = 1);

// Finite-difference gradient (central, step h) of the temperature-T
// KL(q || softmax(f / T)) loss with respect to the logits f = T log p.
std::vector<double> kl_logit_gradient_fd(std::span<const double> p, std::span<const double> q,
                                         double temperature, double step = 1e-5);

// Max |fd - (p - q) / T| over classes.
double kl_gradient_check(std::span<const double> p, std::span<const double> q,
                         double temperature);

// Epoch-to-epoch transitions from correct to incorrect argmax. Samples that are
// never correct score E.
ScoreTable forgetting(const TrajectoryTensor& traj, unsigned jobs = 1);

// Sample standard deviation (denominator J-1) over each length-J window
// [k, k+J); returns K-J+1 values.
std::vector<double> uncertainty_series(std::span<const double> series, std::size_t window);

// Mean of U_k for k in [first, first + count). Shared by Dyn-Unc and CAD.
double mean_uncertainty(std::span<const double> series, std::size_t window, std::size_t first,
                        std::size_t count);

ScoreTable dyn_unc(const TrajectoryTensor& traj, std::size_t window, unsigned jobs = 1);

// Mean of U_k over k in [K-J-W, K-J) computed on the base series restricted to
// epochs [0, K).
double cad_score(std::span<const double> series, const ScoreParams& params);

ScoreTable cad_prune(const TrajectoryTensor& traj, const ScoreParams& params,
                     CadBase base = CadBase::el2n, unsigned jobs = 1);

// CSV `sample_id,score` with a JSON sidecar next to it (same stem, .json).
std::string score_table_csv(const ScoreTable& table);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);
void write_score_table(const ScoreTable& table, const std::filesystem::path& csv);
ScoreTable read_score_table(const std::filesystem::path& csv);

}  // namespace ddkit
