#include "ddkit/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"
#include "ddkit/parallel.hpp"

namespace ddkit {

MetricKind parse_metric_kind(const std::string& name) {
  if (name == "error") return MetricKind::error;
  if (name == "accuracy") return MetricKind::accuracy;
  throw Error(ErrorKind::validation, "metric kind must be error or accuracy, got '" + name + "'");
}

void TrainingCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.epoch < 1) throw Error(ErrorKind::validation, "epochs must be >= 1");
    if (!(p.samples_seen > 0.0) || !std::isfinite(p.samples_seen))
      throw Error(ErrorKind::validation, "samples_seen must be positive");
    if (!std::isfinite(p.metric)) throw Error(ErrorKind::validation, "metric must be finite");
    if (i > 0 && p.epoch <= points[i - 1].epoch)
      throw Error(ErrorKind::validation, "epochs must be strictly increasing");
    if (i > 0 && p.samples_seen < points[i - 1].samples_seen)
      throw Error(ErrorKind::validation, "samples_seen must be non-decreasing");
  }
}

std::vector<double> TrainingCurve::samples_seen() const {
  std::vector<double> n;
  for (const auto& p : points) n.push_back(p.samples_seen);
  return n;
}

std::vector<double> TrainingCurve::errors() const {
  std::vector<double> y;
  for (const auto& p : points) y.push_back(kind == MetricKind::accuracy ? 1.0 - p.metric : p.metric);
  return y;
}

std::vector<double> predict(const ScalingParams& params, std::span<const double> n) {
  std::vector<double> y(n.size());
  double product = 0.0;
  double exponent = params.b;  // b_1
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (!(n[k] > 0.0)) throw Error(ErrorKind::validation, "samples_seen must be positive");
    if (k == 0) {
      product = params.a * std::pow(n[0], params.b);
    } else {
      if (n[k] < n[k - 1]) throw Error(ErrorKind::validation, "samples_seen must be non-decreasing");
      exponent *= params.delta;  // b_{k+1} = b * delta^k
      if (n[k] != n[k - 1]) product *= std::pow(n[k] / n[k - 1], exponent);
    }
    y[k] = product + params.d;
  }
  return y;
}

double sum_squared_error(const ScalingParams& params, std::span<const double> n,
                         std::span<const double> observed) {
  const auto y = predict(params, n);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - observed[i];
    s += r * r;
  }
  return s;
}

std::vector<StartPoint> default_init_grid() {
  std::vector<StartPoint> grid;
  for (double b : {-0.3, 0.0, 0.1})
    for (double delta : {0.5, 1.5, 3.0}) grid.push_back({b, delta});
  return grid;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::vector<double> steps,
                             const NelderMeadOptions& opt) {
  const std::size_t dim = x0.size();
  NelderMeadResult best{x0, f(x0), 1, false};
  for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
    std::vector<std::vector<double>> simplex(dim + 1, best.x);
    std::vector<double> fv(dim + 1, best.fx);
    for (std::size_t i = 0; i < dim; ++i) {
      simplex[i + 1][i] += steps[i];
      fv[i + 1] = f(simplex[i + 1]);
    }
    std::size_t evals = dim;
    bool converged = false;
    std::vector<std::size_t> idx(dim + 1);
    while (evals < opt.max_evaluations) {
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
      const std::size_t lo = idx.front(), hi = idx.back(), second = idx[dim - 1];
      double xspread = 0.0;
      for (std::size_t i = 0; i <= dim; ++i)
        for (std::size_t c = 0; c < dim; ++c)
          xspread = std::max(xspread, std::abs(simplex[i][c] - simplex[lo][c]));
      if (std::abs(fv[hi] - fv[lo]) <= opt.f_tolerance || xspread <= opt.x_tolerance) {
        converged = true;
        break;
      }
      std::vector<double> centroid(dim, 0.0);
      for (std::size_t i = 0; i <= dim; ++i)
        if (i != hi)
          for (std::size_t c = 0; c < dim; ++c) centroid[c] += simplex[i][c] / double(dim);
      auto along = [&](double t) {
        std::vector<double> x(dim);
        for (std::size_t c = 0; c < dim; ++c) x[c] = centroid[c] + t * (simplex[hi][c] - centroid[c]);
        return x;
      };
      auto xr = along(-1.0);
      const double fr = f(xr);
      ++evals;
      if (fr < fv[lo]) {
        auto xe = along(-2.0);
        const double fe = f(xe);
        ++evals;
        if (fe < fr) {
          simplex[hi] = xe;
          fv[hi] = fe;
        } else {
          simplex[hi] = xr;
          fv[hi] = fr;
        }
      } else if (fr < fv[second]) {
        simplex[hi] = xr;
        fv[hi] = fr;
      } else {
        const bool outside = fr < fv[hi];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = f(xc);
        ++evals;
        if (fc < (outside ? fr : fv[hi])) {
          simplex[hi] = xc;
          fv[hi] = fc;
        } else {
          for (std::size_t i = 0; i <= dim; ++i) {
            if (i == lo) continue;
            for (std::size_t c = 0; c < dim; ++c)
              simplex[i][c] = simplex[lo][c] + 0.5 * (simplex[i][c] - simplex[lo][c]);
            fv[i] = f(simplex[i]);
            ++evals;
          }
        }
      }
    }
    const auto lo = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    best.evaluations += evals;
    const bool improved = fv[lo] < best.fx;
    if (improved) {
      best.x = simplex[lo];
      best.fx = fv[lo];
    }
    best.converged = converged;
    if (!improved) break;
    // Shrink the restart simplex around the incumbent.
    for (std::size_t c = 0; c < dim; ++c) {
      double span = 0.0;
      for (std::size_t i = 0; i <= dim; ++i) span = std::max(span, std::abs(simplex[i][c] - best.x[c]));
      steps[c] = std::max(span * 10.0, std::abs(best.x[c]) * 1e-6 + 1e-9);
    }
  }
  return best;
}

namespace {

constexpr double kPenalty = 1e6;

struct Profiled {
  double sse;
  double a;
  double d;
};

// Best (a, d) for fixed (b, delta): y is linear in a and d given the shape
// g_k = predict(a=1, d=0). d is clamped to [0, 1]; a <= 0 is infeasible.
Profiled profile(double b, double delta, std::span<const double> n, std::span<const double> y) {
  const double inf = std::numeric_limits<double>::infinity();
  if (!(delta > 0.0)) return {kPenalty * (1.0 - delta) + kPenalty, 0.0, 0.0};
  const auto g = predict({1.0, b, delta, 0.0}, n);
  for (double v : g)
    if (!std::isfinite(v)) return {inf, 0.0, 0.0};
  const double m = double(g.size());
  const double mg = std::accumulate(g.begin(), g.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sgg = 0.0, sgy = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sgg += (g[i] - mg) * (g[i] - mg);
    sgy += (g[i] - mg) * (y[i] - my);
    gg += g[i] * g[i];
  }
  double a, d;
  if (sgg > 1e-300 && sgg > 1e-24 * gg) {
    a = sgy / sgg;
    d = my - a * mg;
  } else {
    d = 0.0;
    a = gg > 0.0 ? my / mg : 0.0;
  }
  if (d < 0.0 || d > 1.0) {
    d = std::clamp(d, 0.0, 1.0);
    double gy = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * (y[i] - d);
    a = gg > 0.0 ? gy / gg : 0.0;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = a * g[i] + d - y[i];
    sse += r * r;
  }
  if (!std::isfinite(sse)) return {inf, a, d};
  if (!(a > 0.0)) sse += kPenalty * (1.0 - a);
  return {sse, a, d};
}

}  // namespace

ScalingFit fit_scaling(const TrainingCurve& curve, const std::vector<StartPoint>& init_grid,
                       unsigned jobs) {
  curve.validate();
  if (curve.points.size() < 5)
    throw Error(ErrorKind::validation, "scaling fit needs at least 5 observations");
  if (init_grid.empty()) throw Error(ErrorKind::validation, "empty initialization grid");
  const auto n = curve.samples_seen();
  const auto y = curve.errors();

  auto objective = [&](std::span<const double> x) {
    const double v = profile(x[0], x[1], n, y).sse;
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  std::vector<NelderMeadResult> results(init_grid.size());
  parallel_for(init_grid.size(), jobs, [&](std::size_t i) {
    const auto& s = init_grid[i];
    results[i] = nelder_mead(objective, {s.b, s.delta}, {0.05, 0.1 * std::max(0.1, s.delta)});
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].fx < results[best].fx) best = i;
  const auto& r = results[best];
  const auto p = profile(r.x[0], r.x[1], n, y);
  if (!std::isfinite(p.sse) || r.fx >= kPenalty)
    throw Error(ErrorKind::numerical, "scaling fit failed: every start diverged");

  ScalingFit fit;
  fit.params = {p.a, r.x[0], r.x[1], p.d};
  fit.sse = sum_squared_error(fit.params, n, y);
  // A power-law term with no visible variation leaves b unidentified; report
  // the flat member of the family instead.
  const auto shape = predict({p.a, r.x[0], r.x[1], 0.0}, n);
  const auto [lo, hi] = std::minmax_element(shape.begin(), shape.end());
  double y_scale = 0.0;
  for (double v : y) y_scale = std::max(y_scale, std::abs(v));
  bool flat = false;
  if (*hi - *lo <= 1e-9 * std::max(y_scale, 1e-12)) {
    const ScalingParams level{p.a + p.d, 0.0, r.x[1], 0.0};
    const double sse = sum_squared_error(level, n, y);
    if (level.a > 0.0 && sse <= fit.sse + 1e-12 * std::max(1.0, y_scale * y_scale)) {
      fit.params = level;
      fit.sse = sse;
      flat = true;
    }
  }
  fit.converged = r.converged;
  fit.start_index = best;
  if (fit.params.delta > 0.0 && fit.params.delta < 1.0) {
    fit.tau = -1.0 / std::log2(fit.params.delta);
  } else {
    fit.notes =
        "delta >= 1: tau is not representable, since delta = (1/2)^(1/tau) implies delta < 1; "
        "delta is treated as a free positive decay parameter";
  }
  if (flat) fit.notes += std::string(fit.notes.empty() ? "" : "; ") + "flat curve: b fixed at 0";
  if (curve.kind == MetricKind::accuracy)
    fit.notes += std::string(fit.notes.empty() ? "" : "; ") + "accuracy converted to error before fitting";
  return fit;
}

TrainingCurve read_curve(const std::filesystem::path& csv, MetricKind kind) {
  const auto t = io::read_csv(csv);
  const auto e = t.column("epoch"), s = t.column("samples_seen"), m = t.column("metric");
  TrainingCurve c;
  c.kind = kind;
  for (const auto& row : t.rows)
    c.points.push_back({io::parse_int(row[e], "epoch"), io::parse_double(row[s], "samples_seen"),
                        io::parse_double(row[m], "metric")});
  c.validate();
  return c;
}

std::string scaling_fit_json(const ScalingFit& fit) {
  std::string out = "{";
  out += "\"a\":" + io::fmt9(fit.params.a);
  out += ",\"b\":" + io::fmt9(fit.params.b);
  out += ",\"delta\":" + io::fmt9(fit.params.delta);
  out += ",\"d\":" + io::fmt9(fit.params.d);
  out += ",\"tau\":" + (fit.tau ? io::fmt9(*fit.tau) : std::string("null"));
  out += ",\"sse\":" + io::fmt9(fit.sse);
  out += ",\"converged\":" + std::string(fit.converged ? "true" : "false");
  out += ",\"start_index\":" + std::to_string(fit.start_index);
  out += ",\"notes\":" + nlohmann::json(fit.notes).dump();
  out += "}";
  return out;
}

}  // namespace ddkit
