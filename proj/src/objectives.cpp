#include "ddkit/objectives.hpp"

#include <cmath>
#include <map>
#include <set>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"

namespace ddkit {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorKind::validation, std::string(what) + " has non-finite entries");
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double tm_loss(const ParamVector& theta_t, const ParamVector& theta_tM,
               const ParamVector& theta_hat) {
  if (theta_t.dim() != theta_tM.dim() || theta_t.dim() != theta_hat.dim())
    throw Error(ErrorKind::validation, "parameter vectors differ in dimension");
  require_finite(theta_t.values, "theta_t");
  require_finite(theta_tM.values, "theta_t+M");
  require_finite(theta_hat.values, "theta_hat");
  const double denom = squared_distance(theta_t.values, theta_tM.values);
  if (denom < kTmDenominatorEpsilon)
    throw Error(ErrorKind::numerical,
                "degenerate expert trajectory: ||theta_t - theta_t+M||^2 below 1e-12");
  return squared_distance(theta_hat.values, theta_tM.values) / denom;
}

double tm_loss_averaged(const std::vector<ExpertSegment>& experts,
                        const std::vector<ParamVector>& student_endpoints) {
  if (experts.empty()) throw Error(ErrorKind::validation, "no expert segments");
  if (experts.size() != student_endpoints.size())
    throw Error(ErrorKind::validation, "expert segments and student endpoints are not aligned");
  double s = 0.0;
  for (std::size_t i = 0; i < experts.size(); ++i)
    s += tm_loss(experts[i].start, experts[i].target, student_endpoints[i]);
  return s / double(experts.size());
}

double bn_matching_loss(const LayerStats& stats, double lambda_var, bool squared) {
  if (!std::isfinite(lambda_var)) throw Error(ErrorKind::validation, "lambda_var must be finite");
  double mean_term = 0.0, var_term = 0.0;
  for (std::size_t l = 0; l < stats.size(); ++l) {
    const auto& s = stats[l];
    const auto n = s.mean.size();
    if (s.var.size() != n || s.running_mean.size() != n || s.running_var.size() != n)
      throw Error(ErrorKind::validation, "layer " + std::to_string(l) + ": statistic lengths differ");
    for (double v : s.var)
      if (v < 0.0) throw Error(ErrorKind::validation, "layer " + std::to_string(l) + ": negative variance");
    for (double v : s.running_var)
      if (v < 0.0) throw Error(ErrorKind::validation, "layer " + std::to_string(l) + ": negative running variance");
    const double dm = squared_distance(s.mean, s.running_mean);
    const double dv = squared_distance(s.var, s.running_var);
    mean_term += squared ? dm : std::sqrt(dm);
    var_term += squared ? dv : std::sqrt(dv);
  }
  return mean_term + lambda_var * var_term;
}

namespace {

std::vector<double> column_mean(const FeatureBatch& b, std::size_t& dim) {
  if (b.embeddings.empty())
    throw Error(ErrorKind::validation, "empty feature batch (" + b.model_tag + ", " + b.augmentation_tag + ")");
  if (dim == 0) dim = b.embeddings.front().size();
  std::vector<double> m(dim, 0.0);
  for (const auto& row : b.embeddings) {
    if (row.size() != dim) throw Error(ErrorKind::validation, "feature dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) {
      if (!std::isfinite(row[i])) throw Error(ErrorKind::validation, "non-finite feature");
      m[i] += row[i];
    }
  }
  for (auto& v : m) v /= double(b.embeddings.size());
  return m;
}

template <typename T, typename KeyFn>
std::map<std::string, const T*> by_key(const std::vector<T>& items, KeyFn key, const char* what) {
  std::map<std::string, const T*> out;
  for (const auto& it : items)
    if (!out.emplace(key(it), &it).second)
      throw Error(ErrorKind::validation, std::string("duplicate ") + what + " tag '" + key(it) + "'");
  return out;
}

template <typename T>
void require_same_keys(const std::map<std::string, const T*>& a,
                       const std::map<std::string, const T*>& b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::validation, "real and synthetic tags are misaligned");
  for (const auto& [k, _] : a)
    if (!b.count(k)) throw Error(ErrorKind::validation, "tag '" + k + "' has no synthetic counterpart");
}

}  // namespace

double dm_loss(const std::vector<FeatureBatch>& real, const std::vector<FeatureBatch>& syn) {
  if (real.empty()) throw Error(ErrorKind::validation, "no feature batches");
  auto key = [](const FeatureBatch& b) { return b.model_tag + "\x1f" + b.augmentation_tag; };
  const auto r = by_key(real, key, "feature");
  const auto s = by_key(syn, key, "feature");
  require_same_keys(r, s);
  std::size_t dim = 0;
  double total = 0.0;
  for (const auto& [k, rb] : r) {
    const auto mr = column_mean(*rb, dim);
    const auto ms = column_mean(*s.at(k), dim);
    total += squared_distance(mr, ms);
  }
  return total / double(r.size());
}

double dc_loss(const std::vector<GradVector>& real, const std::vector<GradVector>& syn) {
  if (real.empty()) throw Error(ErrorKind::validation, "no gradient vectors");
  const auto r = by_key(real, [](const GradVector& g) { return g.tag; }, "gradient");
  const auto s = by_key(syn, [](const GradVector& g) { return g.tag; }, "gradient");
  require_same_keys(r, s);
  double total = 0.0;
  for (const auto& [k, rg] : r) {
    const auto& sg = *s.at(k);
    if (rg->layers.size() != sg.layers.size())
      throw Error(ErrorKind::validation, "gradient layer counts differ for tag '" + k + "'");
    for (std::size_t l = 0; l < rg->layers.size(); ++l) {
      const auto& a = rg->layers[l];
      const auto& b = sg.layers[l];
      if (a.size() != b.size())
        throw Error(ErrorKind::validation, "layer " + std::to_string(l) + " dimension mismatch");
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (!(na > 0.0) || !(nb > 0.0))
        throw Error(ErrorKind::numerical, "zero-norm gradient in layer " + std::to_string(l));
      const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
      total += 1.0 - cos;
    }
  }
  return total / double(r.size());
}

ParamVector read_param_file(const std::filesystem::path& file, long long tag) {
  const auto f = io::decode_f32(io::read_bytes(file));
  ParamVector v{tag, {f.begin(), f.end()}};
  require_finite(v.values, file.string().c_str());
  return v;
}

void write_param_file(const ParamVector& v, const std::filesystem::path& file) {
  require_finite(v.values, "parameter vector");
  io::write_atomic(file, io::encode_f32(std::vector<float>(v.values.begin(), v.values.end())));
}

std::vector<ParamIndexEntry> read_param_index(const std::filesystem::path& index) {
  std::vector<ParamIndexEntry> out;
  try {
    const auto j = nlohmann::json::parse(io::read_text(index));
    for (const auto& e : j.at("vectors"))
      out.push_back({e.at("tag").get<long long>(), e.at("file").get<std::string>(),
                     e.at("dim").get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, index.string() + ": " + e.what());
  }
  std::set<long long> tags;
  for (const auto& e : out)
    if (!tags.insert(e.tag).second)
      throw Error(ErrorKind::format, index.string() + ": duplicate tag " + std::to_string(e.tag));
  return out;
}

void write_param_index(const std::vector<ParamIndexEntry>& entries,
                       const std::filesystem::path& index) {
  nlohmann::ordered_json j;
  j["vectors"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json item;
    item["tag"] = e.tag;
    item["file"] = e.file;
    item["dim"] = e.dim;
    j["vectors"].push_back(item);
  }
  io::write_atomic(index, j.dump(2) + "\n");
}

ParamVector load_indexed_param(const std::filesystem::path& index, long long tag) {
  for (const auto& e : read_param_index(index)) {
    if (e.tag != tag) continue;
    auto v = read_param_file(index.parent_path() / e.file, tag);
    if (v.dim() != e.dim)
      throw Error(ErrorKind::shape_mismatch, e.file + ": index declares dim " + std::to_string(e.dim) +
                                                 ", file holds " + std::to_string(v.dim()));
    return v;
  }
  throw Error(ErrorKind::validation, index.string() + ": no vector with tag " + std::to_string(tag));
}

namespace {

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
}

Side parse_side(const std::string& s) {
  if (s == "real") return Side::real;
  if (s == "synthetic" || s == "syn") return Side::synthetic;
  throw Error(ErrorKind::format, "side must be real or synthetic, got '" + s + "'");
}

}  // namespace

LayerStats read_layer_stats(const std::filesystem::path& json) {
  const auto j = parse_json_file(json);
  LayerStats out;
  try {
    for (const auto& l : j.at("layers"))
      out.push_back({l.at("mean").get<std::vector<double>>(), l.at("var").get<std::vector<double>>(),
                     l.at("running_mean").get<std::vector<double>>(),
                     l.at("running_var").get<std::vector<double>>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, json.string() + ": " + e.what());
  }
  return out;
}

std::pair<std::vector<FeatureBatch>, std::vector<FeatureBatch>> read_feature_batches(
    const std::filesystem::path& json) {
  const auto j = parse_json_file(json);
  std::pair<std::vector<FeatureBatch>, std::vector<FeatureBatch>> out;
  try {
    for (const auto& b : j.at("batches")) {
      FeatureBatch fb;
      fb.side = parse_side(b.at("side").get<std::string>());
      fb.model_tag = b.value("model", "");
      fb.augmentation_tag = b.value("augmentation", "");
      fb.embeddings = b.at("embeddings").get<std::vector<std::vector<double>>>();
      (fb.side == Side::real ? out.first : out.second).push_back(std::move(fb));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, json.string() + ": " + e.what());
  }
  return out;
}

std::pair<std::vector<GradVector>, std::vector<GradVector>> read_grad_vectors(
    const std::filesystem::path& json) {
  const auto j = parse_json_file(json);
  std::pair<std::vector<GradVector>, std::vector<GradVector>> out;
  try {
    for (const auto& g : j.at("grads")) {
      GradVector gv;
      gv.side = parse_side(g.at("side").get<std::string>());
      gv.tag = g.value("tag", "");
      gv.layers = g.at("layers").get<std::vector<std::vector<double>>>();
      (gv.side == Side::real ? out.first : out.second).push_back(std::move(gv));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, json.string() + ": " + e.what());
  }
  return out;
}

}  // namespace ddkit
