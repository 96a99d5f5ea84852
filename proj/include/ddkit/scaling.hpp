#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddkit {

enum class MetricKind { error, accuracy };

MetricKind parse_metric_kind(const std::string& name);

struct CurvePoint {
  long long epoch = 1;        // k >= 1
  double samples_seen = 1.0;  // cumulative n_k > 0
  double metric = 0.0;
};

struct TrainingCurve {
  std::vector<CurvePoint> points;
  MetricKind kind = MetricKind::error;

  void validate() const;
  std::vector<double> samples_seen() const;
  // Metric as error (1 - accuracy for accuracy curves).
  std::vector<double> errors() const;
};

struct ScalingParams {
  double a = 1.0;      // normalizing factor
  double b = 0.0;      // utility exponent of the first epoch
  double delta = 1.0;  // per-epoch decay of the exponent: b_{k+1} = b * delta^k
  double d = 0.0;      // irreducible loss
};

struct ScalingFit {
  ScalingParams params;
  std::optional<double> tau;  // -1 / log2(delta), only for delta in (0, 1)
  double sse = 0.0;
  bool converged = false;
  std::size_t start_index = 0;
  std::string notes;
};

// y_k = a * n_1^{b_1} * prod_{j=2..k} (n_j / n_{j-1})^{b_j} + d, b_j = b * delta^{j-1}.
std::vector<double> predict(const ScalingParams& params, std::span<const double> samples_seen);

double sum_squared_error(const ScalingParams& params, std::span<const double> samples_seen,
                         std::span<const double> observed);

struct StartPoint {
  double b = 0.0;
  double delta = 1.0;
};

// b in {-0.3, 0, 0.1} x delta in {0.5, 1.5, 3}.
std::vector<StartPoint> default_init_grid();

// Multi-start Nelder-Mead least squares. The best start wins (ties by start
// index), independent of `jobs`.
ScalingFit fit_scaling(const TrainingCurve& curve,
                       const std::vector<StartPoint>& init_grid = default_init_grid(),
                       unsigned jobs = 1);

struct NelderMeadOptions {
  std::size_t max_evaluations = 20000;
  double f_tolerance = 1e-30;
  double x_tolerance = 1e-13;
  std::size_t max_restarts = 30;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Derivative-free simplex minimizer, restarted from the incumbent until a
// restart no longer improves it.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::vector<double> steps,
                             const NelderMeadOptions& options = {});

TrainingCurve read_curve(const std::filesystem::path& csv, MetricKind kind);
std::string scaling_fit_json(const ScalingFit& fit);

}  // namespace ddkit
