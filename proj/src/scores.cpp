#include "ddkit/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"
#include "ddkit/parallel.hpp"

namespace ddkit {

ScoreMethod parse_score_method(const std::string& name) {
  if (name == "el2n") return ScoreMethod::el2n;
  if (name == "el2n_sl" || name == "el2n-sl") return ScoreMethod::el2n_sl;
  if (name == "forgetting") return ScoreMethod::forgetting;
  if (name == "dyn_unc" || name == "dyn-unc") return ScoreMethod::dyn_unc;
  if (name == "cad") return ScoreMethod::cad;
  throw Error(ErrorKind::validation, "unknown score method '" + name + "'");
}

const char* to_string(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::el2n: return "el2n";
    case ScoreMethod::el2n_sl: return "el2n_sl";
    case ScoreMethod::forgetting: return "forgetting";
    case ScoreMethod::dyn_unc: return "dyn_unc";
    case ScoreMethod::cad: return "cad";
  }
  return "unknown";
}

CadBase parse_cad_base(const std::string& name) {
  if (name == "el2n") return CadBase::el2n;
  if (name == "target_prob" || name == "target-prob") return CadBase::target_prob;
  throw Error(ErrorKind::validation, "unknown CAD base score '" + name + "'");
}

double ScoreTable::at(const std::string& sample_id) const {
  auto it = std::find(sample_ids.begin(), sample_ids.end(), sample_id);
  if (it == sample_ids.end())
    throw Error(ErrorKind::validation, "no score for sample '" + sample_id + "'");
  return scores[static_cast<std::size_t>(it - sample_ids.begin())];
}

std::map<std::string, double> ScoreTable::as_map() const {
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < sample_ids.size(); ++i) m.emplace(sample_ids[i], scores[i]);
  return m;
}

void ScoreParams::validate(std::size_t num_epochs) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw Error(ErrorKind::validation, "temperature T must be positive");
  if (window < 2) throw Error(ErrorKind::validation, "window J must be >= 2");
  if (width < 1) throw Error(ErrorKind::validation, "width W must be >= 1");
  if (budget > num_epochs)
    throw Error(ErrorKind::validation, "budget K=" + std::to_string(budget) +
                                           " exceeds stored epochs E=" + std::to_string(num_epochs));
  if (budget < window + width)
    throw Error(ErrorKind::validation, "need K - J - W >= 0 (K=" + std::to_string(budget) +
                                           ", J=" + std::to_string(window) +
                                           ", W=" + std::to_string(width) + ")");
}

namespace {

ScoreTable make_table(const TrajectoryTensor& traj, ScoreMethod method) {
  ScoreTable t;
  t.method = method;
  t.sample_ids = traj.sample_ids;
  t.scores.assign(traj.num_samples, 0.0);
  t.source_manifest_checksum = traj.manifest_checksum;
  return t;
}

EpochRange resolve(const TrajectoryTensor& traj, std::optional<EpochRange> range) {
  EpochRange r = range.value_or(EpochRange{0, traj.num_epochs - 1});
  if (r.first > r.last) throw Error(ErrorKind::validation, "empty epoch range");
  if (r.last >= traj.num_epochs)
    throw Error(ErrorKind::validation, "epoch range end " + std::to_string(r.last) +
                                           " is beyond E-1=" + std::to_string(traj.num_epochs - 1));
  return r;
}

double el2n_at(const TrajectoryTensor& traj, std::size_t e, std::size_t n) {
  const auto p = traj.row(e, n);
  const auto y = traj.labels[n];
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double d = double(p[c]) - (c == y ? 1.0 : 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> el2n_series(const TrajectoryTensor& traj, std::size_t sample,
                                std::size_t num_epochs) {
  std::vector<double> out(num_epochs);
  for (std::size_t e = 0; e < num_epochs; ++e) out[e] = el2n_at(traj, e, sample);
  return out;
}

std::vector<double> target_prob_series(const TrajectoryTensor& traj, std::size_t sample,
                                       std::size_t num_epochs) {
  std::vector<double> out(num_epochs);
  for (std::size_t e = 0; e < num_epochs; ++e) out[e] = traj.target_prob(e, sample);
  return out;
}

ScoreTable el2n(const TrajectoryTensor& traj, std::optional<EpochRange> range, unsigned jobs) {
  const auto r = resolve(traj, range);
  auto table = make_table(traj, ScoreMethod::el2n);
  table.config = {{"e_start", double(r.first)}, {"e_end", double(r.last)}};
  parallel_for(traj.num_samples, jobs, [&](std::size_t n) {
    double s = 0.0;
    for (std::size_t e = r.first; e <= r.last; ++e) s += el2n_at(traj, e, n);
    table.scores[n] = s / double(r.last - r.first + 1);
  });
  return table;
}

ScoreTable el2n_sl(const TrajectoryTensor& traj, double temperature,
                   std::optional<EpochRange> range, unsigned jobs) {
  if (!traj.teacher_probs)
    throw Error(ErrorKind::validation, "EL2N-SL needs teacher soft labels (has_teacher=false)");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw Error(ErrorKind::validation, "temperature T must be positive");
  const auto r = resolve(traj, range);
  auto table = make_table(traj, ScoreMethod::el2n_sl);
  table.config = {{"T", temperature}, {"e_start", double(r.first)}, {"e_end", double(r.last)}};
  parallel_for(traj.num_samples, jobs, [&](std::size_t n) {
    const auto q = traj.teacher_row(n);
    double total = 0.0;
    for (std::size_t e = r.first; e <= r.last; ++e) {
      const auto p = traj.row(e, n);
      double s = 0.0;
      for (std::size_t c = 0; c < p.size(); ++c) {
        const double d = double(p[c]) - double(q[c]);
        s += d * d;
      }
      total += std::sqrt(s);
    }
    table.scores[n] = total / double(r.last - r.first + 1) / temperature;
  });
  return table;
}

namespace {

void check_simplex(std::span<const double> v, const char* what) {
  double s = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0)
      throw Error(ErrorKind::validation, std::string(what) + " has a negative or non-finite entry");
    s += x;
  }
  if (std::abs(s - 1.0) > kRowSumTolerance)
    throw Error(ErrorKind::validation, std::string(what) + " is not normalized");
}

// KL(q || softmax(f / T)).
double kl_of_logits(std::span<const double> f, std::span<const double> q, double temperature) {
  double mx = -INFINITY;
  for (double v : f) mx = std::max(mx, v / temperature);
  double z = 0.0;
  for (double v : f) z += std::exp(v / temperature - mx);
  const double log_z = mx + std::log(z);
  double loss = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (q[i] == 0.0) continue;
    const double log_p = f[i] / temperature - log_z;
    loss += q[i] * (std::log(q[i]) - log_p);
  }
  return loss;
}

}  // namespace

std::vector<double> kl_logit_gradient_fd(std::span<const double> p, std::span<const double> q,
                                         double temperature, double step) {
  if (p.size() != q.size() || p.empty())
    throw Error(ErrorKind::validation, "p and q must be non-empty and of equal length");
  if (!(temperature > 0.0)) throw Error(ErrorKind::validation, "temperature T must be positive");
  check_simplex(p, "p");
  check_simplex(q, "q");
  std::vector<double> f(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0)
      throw Error(ErrorKind::numerical, "p has a zero entry; logits log p are undefined");
    f[k] = temperature * std::log(p[k]);
  }
  std::vector<double> grad(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = f[k];
    f[k] = orig + step;
    const double up = kl_of_logits(f, q, temperature);
    f[k] = orig - step;
    const double down = kl_of_logits(f, q, temperature);
    f[k] = orig;
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

double kl_gradient_check(std::span<const double> p, std::span<const double> q,
                         double temperature) {
  const auto fd = kl_logit_gradient_fd(p, q, temperature);
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    worst = std::max(worst, std::abs(fd[k] - (p[k] - q[k]) / temperature));
  return worst;
}

ScoreTable forgetting(const TrajectoryTensor& traj, unsigned jobs) {
  if (traj.num_epochs < 2)
    throw Error(ErrorKind::validation, "forgetting needs at least two epochs");
  auto table = make_table(traj, ScoreMethod::forgetting);
  parallel_for(traj.num_samples, jobs, [&](std::size_t n) {
    auto correct = [&](std::size_t e) {
      const auto p = traj.row(e, n);
      // First maximum wins on ties.
      const auto arg = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      return arg == traj.labels[n];
    };
    bool ever = false;
    std::size_t events = 0;
    bool prev = correct(0);
    ever = prev;
    for (std::size_t e = 1; e < traj.num_epochs; ++e) {
      const bool now = correct(e);
      if (prev && !now) ++events;
      ever = ever || now;
      prev = now;
    }
    table.scores[n] = ever ? double(events) : double(traj.num_epochs);
  });
  return table;
}

namespace {

double window_stddev(std::span<const double> s, std::size_t k, std::size_t J) {
  // offsets from the first value keep constant windows exactly zero
  const double origin = s[k];
  double mean = 0.0;
  for (std::size_t j = 0; j < J; ++j) mean += s[k + j] - origin;
  mean /= double(J);
  double ss = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double d = (s[k + j] - origin) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / double(J - 1));
}

}  // namespace

std::vector<double> uncertainty_series(std::span<const double> series, std::size_t window) {
  if (window < 2) throw Error(ErrorKind::validation, "window J must be >= 2");
  if (series.size() < window)
    throw Error(ErrorKind::validation, "series of length " + std::to_string(series.size()) +
                                           " is shorter than window J=" + std::to_string(window));
  std::vector<double> u(series.size() - window + 1);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = window_stddev(series, k, window);
  return u;
}

double mean_uncertainty(std::span<const double> series, std::size_t window, std::size_t first,
                        std::size_t count) {
  if (window < 2) throw Error(ErrorKind::validation, "window J must be >= 2");
  if (count == 0 || first + count + window - 1 > series.size())
    throw Error(ErrorKind::validation, "uncertainty windows out of range");
  double s = 0.0;
  for (std::size_t k = first; k < first + count; ++k) s += window_stddev(series, k, window);
  return s / double(count);
}

ScoreTable dyn_unc(const TrajectoryTensor& traj, std::size_t window, unsigned jobs) {
  if (window < 2) throw Error(ErrorKind::validation, "window J must be >= 2");
  if (traj.num_epochs < window)
    throw Error(ErrorKind::validation, "Dyn-Unc needs E >= J (E=" + std::to_string(traj.num_epochs) +
                                           ", J=" + std::to_string(window) + ")");
  auto table = make_table(traj, ScoreMethod::dyn_unc);
  table.config = {{"J", double(window)}};
  const std::size_t windows = traj.num_epochs - window + 1;
  parallel_for(traj.num_samples, jobs, [&](std::size_t n) {
    const auto s = target_prob_series(traj, n, traj.num_epochs);
    table.scores[n] = mean_uncertainty(s, window, 0, windows);
  });
  return table;
}

double cad_score(std::span<const double> series, const ScoreParams& params) {
  params.validate(series.size());
  const std::size_t K = params.budget, J = params.window, W = params.width;
  return mean_uncertainty(series.first(K), J, K - J - W, W);
}

ScoreTable cad_prune(const TrajectoryTensor& traj, const ScoreParams& params, CadBase base,
                     unsigned jobs) {
  params.validate(traj.num_epochs);
  auto table = make_table(traj, ScoreMethod::cad);
  table.config = {{"J", double(params.window)},
                  {"W", double(params.width)},
                  {"K", double(params.budget)},
                  {"base_target_prob", base == CadBase::target_prob ? 1.0 : 0.0}};
  parallel_for(traj.num_samples, jobs, [&](std::size_t n) {
    const auto s = base == CadBase::el2n ? el2n_series(traj, n, params.budget)
                                         : target_prob_series(traj, n, params.budget);
    table.scores[n] = cad_score(s, params);
  });
  return table;
}

std::string score_table_csv(const ScoreTable& table) {
  std::string out = "sample_id,score\n";
  for (std::size_t i = 0; i < table.sample_ids.size(); ++i) {
    out += table.sample_ids[i];
    out += ',';
    out += io::fmt9(table.scores[i]);
    out += '\n';
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  if (p == csv) p += ".json";
  return p;
}

void write_score_table(const ScoreTable& table, const std::filesystem::path& csv) {
  nlohmann::ordered_json side;
  side["method"] = table.method ? to_string(*table.method) : "unknown";
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : table.config) cfg[k] = v;
  side["config"] = cfg;
  side["num_samples"] = table.sample_ids.size();
  side["source_manifest_checksum"] = table.source_manifest_checksum;
  io::write_atomic(csv, score_table_csv(table));
  io::write_atomic(sidecar_path(csv), side.dump(2) + "\n");
}

ScoreTable read_score_table(const std::filesystem::path& csv) {
  const auto t = io::read_csv(csv);
  const auto id_col = t.column("sample_id");
  const auto score_col = t.column("score");
  ScoreTable table;
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    if (!seen.insert(row[id_col]).second)
      throw Error(ErrorKind::format, csv.string() + ": duplicate sample_id " + row[id_col]);
    const double v = io::parse_double(row[score_col], "score");
    if (!std::isfinite(v)) throw Error(ErrorKind::validation, "non-finite score for " + row[id_col]);
    table.sample_ids.push_back(row[id_col]);
    table.scores.push_back(v);
  }
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    try {
      auto j = nlohmann::json::parse(io::read_text(side));
      if (j.contains("method") && j["method"] != "unknown")
        table.method = parse_score_method(j["method"].get<std::string>());
      if (j.contains("config"))
        for (const auto& [k, v] : j["config"].items()) table.config[k] = v.get<double>();
      if (j.contains("source_manifest_checksum"))
        table.source_manifest_checksum = j["source_manifest_checksum"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, side.string() + ": " + e.what());
    }
  }
  return table;
}

}  // namespace ddkit
