#include "ddkit/trajstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <set>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/fnv.hpp"
#include "ddkit/io.hpp"
#include "ddkit/random.hpp"

namespace ddkit {

using ordered_json = nlohmann::ordered_json;

std::uint32_t TrajectoryTensor::class_of(const std::string& sample_id) const {
  auto idx = index_of(sample_id);
  if (!idx) throw Error(ErrorKind::validation, "unknown sample id '" + sample_id + "'");
  return labels[*idx];
}

std::optional<std::size_t> TrajectoryTensor::index_of(const std::string& sample_id) const {
  auto it = id_index_.find(sample_id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<std::size_t>> TrajectoryTensor::class_members() const {
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t n = 0; n < num_samples; ++n) members[labels[n]].push_back(n);
  return members;
}

void TrajectoryTensor::reindex() {
  id_index_.clear();
  id_index_.reserve(sample_ids.size());
  for (std::size_t i = 0; i < sample_ids.size(); ++i) id_index_.emplace(sample_ids[i], i);
}

namespace {

void check_rows(std::span<const float> data, std::size_t num_rows, std::size_t width,
                const char* what) {
  for (std::size_t r = 0; r < num_rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      const float v = data[r * width + c];
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
        throw Error(ErrorKind::normalization, std::string(what) + ": row " + std::to_string(r) +
                                                  " has entry outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw Error(ErrorKind::normalization, std::string(what) + ": row " + std::to_string(r) +
                                                " sums to " + io::fmt9(sum));
  }
}

}  // namespace

void TrajectoryTensor::validate() const {
  if (num_epochs == 0 || num_samples == 0 || num_classes == 0)
    throw Error(ErrorKind::validation, "E, N and C must be positive");
  if (probs.size() != num_epochs * num_samples * num_classes)
    throw Error(ErrorKind::shape_mismatch, "probs length does not match E*N*C");
  if (labels.size() != num_samples)
    throw Error(ErrorKind::shape_mismatch, "labels length does not match N");
  if (sample_ids.size() != num_samples)
    throw Error(ErrorKind::shape_mismatch, "sample_ids length does not match N");
  if (teacher_probs && teacher_probs->size() != num_samples * num_classes)
    throw Error(ErrorKind::shape_mismatch, "teacher_probs length does not match N*C");
  if (lr_schedule && lr_schedule->size() != num_epochs)
    throw Error(ErrorKind::shape_mismatch, "lr schedule length does not match E");
  for (auto l : labels)
    if (l >= num_classes)
      throw Error(ErrorKind::validation, "label " + std::to_string(l) + " out of range");
  std::set<std::string_view> seen;
  for (const auto& id : sample_ids) {
    if (id.empty() || id.find_first_of("\n\r,") != std::string::npos)
      throw Error(ErrorKind::validation, "invalid sample id '" + id + "'");
    if (!seen.insert(id).second)
      throw Error(ErrorKind::validation, "duplicate sample id '" + id + "'");
  }
  if (lr_schedule)
    for (float lr : *lr_schedule)
      if (!std::isfinite(lr) || lr < 0.0f)
        throw Error(ErrorKind::validation, "learning rates must be finite and non-negative");
  check_rows(probs, num_epochs * num_samples, num_classes, "probs");
  if (teacher_probs) check_rows(*teacher_probs, num_samples, num_classes, "teacher");
}

namespace {

const std::set<std::string> kManifestKeys = {"format_version", "E",     "N",
                                             "C",              "endianness", "dtype",
                                             "has_teacher",    "files", "checksums"};

std::string ids_text(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    out += id;
    out += '\n';
  }
  return out;
}

std::vector<std::string> parse_ids(const std::string& text) {
  std::vector<std::string> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos)
      throw Error(ErrorKind::format, "ids.txt: last line is not LF-terminated");
    ids.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return ids;
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

std::string write_trajectory(const TrajectoryTensor& traj, const fs::path& dir) {
  traj.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::io, "cannot create directory " + dir.string());

  struct Blob {
    std::string role, file;
    std::vector<std::uint8_t> bytes;
  };
  std::vector<Blob> blobs;
  blobs.push_back({"probs", "probs.bin", io::encode_f32(traj.probs)});
  blobs.push_back({"labels", "labels.bin", io::encode_u32(traj.labels)});
  if (traj.teacher_probs) blobs.push_back({"teacher", "teacher.bin", io::encode_f32(*traj.teacher_probs)});
  if (traj.lr_schedule) blobs.push_back({"lr", "lr.bin", io::encode_f32(*traj.lr_schedule)});
  const auto ids = ids_text(traj.sample_ids);
  blobs.push_back({"ids", "ids.txt", {ids.begin(), ids.end()}});

  ordered_json files = ordered_json::object();
  ordered_json checksums = ordered_json::object();
  for (const auto& b : blobs) {
    files[b.role] = b.file;
    checksums[b.role] = to_hex(fnv1a64(b.bytes));
    io::write_atomic(dir / b.file, b.bytes);
  }
  for (const char* stale : {"teacher.bin", "lr.bin"}) {
    const bool present = std::any_of(blobs.begin(), blobs.end(),
                                     [&](const Blob& b) { return b.file == stale; });
    if (!present) fs::remove(dir / stale, ec);
  }

  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["E"] = traj.num_epochs;
  manifest["N"] = traj.num_samples;
  manifest["C"] = traj.num_classes;
  manifest["endianness"] = "little";
  manifest["dtype"] = "float32";
  manifest["has_teacher"] = traj.teacher_probs.has_value();
  manifest["files"] = files;
  manifest["checksums"] = checksums;
  const std::string text = manifest.dump(2) + "\n";
  io::write_atomic(dir / "manifest.json", text);
  return to_hex(fnv1a64(as_bytes(text)));
}

TrajectoryTensor load_trajectory(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const std::string text = io::read_text(manifest_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, "manifest.json: " + std::string(e.what()));
  }
  if (!m.is_object()) throw Error(ErrorKind::format, "manifest.json: not an object");
  for (const auto& key : kManifestKeys)
    if (!m.contains(key)) throw Error(ErrorKind::format, "manifest.json: missing key '" + key + "'");
  for (const auto& [key, _] : m.items())
    if (!kManifestKeys.count(key))
      throw Error(ErrorKind::format, "manifest.json: unexpected key '" + key + "'");

  TrajectoryTensor t;
  std::string role_for_error;
  try {
    if (m["format_version"].get<int>() != kFormatVersion)
      throw Error(ErrorKind::format, "unsupported format_version");
    if (m["endianness"].get<std::string>() != "little")
      throw Error(ErrorKind::format, "endianness must be \"little\"");
    if (m["dtype"].get<std::string>() != "float32")
      throw Error(ErrorKind::format, "dtype must be \"float32\"");
    auto positive = [&](const char* key) {
      auto v = m[key].get<long long>();
      if (v <= 0) throw Error(ErrorKind::validation, std::string(key) + " must be positive");
      return static_cast<std::size_t>(v);
    };
    t.num_epochs = positive("E");
    t.num_samples = positive("N");
    t.num_classes = positive("C");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, "manifest.json: " + std::string(e.what()));
  }
  const bool has_teacher = m["has_teacher"].is_boolean() && m["has_teacher"].get<bool>();
  if (!m["has_teacher"].is_boolean())
    throw Error(ErrorKind::format, "manifest.json: has_teacher must be boolean");
  const auto& files = m["files"];
  const auto& checksums = m["checksums"];
  if (!files.is_object() || !checksums.is_object())
    throw Error(ErrorKind::format, "manifest.json: files and checksums must be objects");
  if (files.contains("teacher") != has_teacher)
    throw Error(ErrorKind::format, "manifest.json: has_teacher disagrees with files");

  const std::size_t E = t.num_epochs, N = t.num_samples, C = t.num_classes;
  auto load = [&](const std::string& role, std::optional<std::size_t> expected_bytes) {
    if (!files.contains(role) || !files[role].is_string())
      throw Error(ErrorKind::format, "manifest.json: files." + role + " missing");
    if (!checksums.contains(role) || !checksums[role].is_string())
      throw Error(ErrorKind::format, "manifest.json: checksums." + role + " missing");
    const auto path = dir / files[role].get<std::string>();
    if (!fs::exists(path)) throw Error(ErrorKind::missing_file, "missing file: " + path.string());
    auto bytes = io::read_bytes(path);
    if (expected_bytes && bytes.size() != *expected_bytes)
      throw Error(ErrorKind::shape_mismatch,
                  path.filename().string() + ": expected " + std::to_string(*expected_bytes) +
                      " bytes, found " + std::to_string(bytes.size()));
    if (to_hex(fnv1a64(bytes)) != checksums[role].get<std::string>())
      throw Error(ErrorKind::checksum_mismatch, path.filename().string() + ": checksum mismatch");
    return bytes;
  };

  t.probs = io::decode_f32(load("probs", E * N * C * 4));
  t.labels = io::decode_u32(load("labels", N * 4));
  if (has_teacher) t.teacher_probs = io::decode_f32(load("teacher", N * C * 4));
  if (files.contains("lr")) t.lr_schedule = io::decode_f32(load("lr", E * 4));
  {
    auto bytes = load("ids", std::nullopt);
    t.sample_ids = parse_ids(std::string(bytes.begin(), bytes.end()));
    if (t.sample_ids.size() != N)
      throw Error(ErrorKind::shape_mismatch, "ids.txt: expected " + std::to_string(N) +
                                                " ids, found " + std::to_string(t.sample_ids.size()));
  }
  t.validate();
  t.reindex();
  t.manifest_checksum = to_hex(fnv1a64(as_bytes(text)));
  return t;
}

Scenario parse_scenario(const std::string& name) {
  if (name == "constant") return Scenario::constant;
  if (name == "late-learner") return Scenario::late_learner;
  if (name == "random-walk") return Scenario::random_walk;
  if (name == "sl-clustered") return Scenario::sl_clustered;
  throw Error(ErrorKind::validation, "unknown scenario '" + name + "'");
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::constant: return "constant";
    case Scenario::late_learner: return "late-learner";
    case Scenario::random_walk: return "random-walk";
    case Scenario::sl_clustered: return "sl-clustered";
  }
  return "unknown";
}

std::string synthetic_sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%06zu", index);
  return buf;
}

SyntheticRoles synthetic_roles(const SyntheticSpec& spec) {
  SyntheticRoles roles;
  if (spec.scenario != Scenario::late_learner) return roles;
  std::vector<std::size_t> order(spec.num_samples);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(spec.seed, "roles"));
  rng.shuffle(order);
  const std::size_t n_late = (spec.num_samples + 5) / 10;
  const std::size_t n_early = std::min(spec.num_samples - n_late, (spec.num_samples + 2) / 5);
  roles.late_learners.assign(order.begin(), order.begin() + n_late);
  roles.early_learners.assign(order.begin() + n_late, order.begin() + n_late + n_early);
  std::sort(roles.late_learners.begin(), roles.late_learners.end());
  std::sort(roles.early_learners.begin(), roles.early_learners.end());
  return roles;
}

namespace {

std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (auto& v : p) v /= s;
  return p;
}

std::vector<double> random_logits(Rng& rng, std::size_t C, std::uint32_t label) {
  std::vector<double> z(C);
  for (auto& v : z) v = 1.5 * rng.normal();
  z[label] += 2.0;
  return z;
}

// Target probability `t` on the label; the remainder spread by fixed weights.
void fill_row(float* out, double t, std::uint32_t label, const std::vector<double>& rest) {
  for (std::size_t c = 0; c < rest.size(); ++c)
    out[c] = static_cast<float>(c == label ? t : (1.0 - t) * rest[c]);
}

}  // namespace

TrajectoryTensor make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_epochs < 1 || spec.num_samples < 1 || spec.num_classes < 1)
    throw Error(ErrorKind::validation, "synthetic E, N, C must be >= 1");
  const std::size_t E = spec.num_epochs, N = spec.num_samples, C = spec.num_classes;
  TrajectoryTensor t;
  t.num_epochs = E;
  t.num_samples = N;
  t.num_classes = C;
  t.probs.assign(E * N * C, 0.0f);
  t.labels.resize(N);
  t.sample_ids.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    t.labels[n] = static_cast<std::uint32_t>(n % C);
    t.sample_ids[n] = synthetic_sample_id(n);
  }
  std::vector<float> lr(E);
  for (std::size_t e = 0; e < E; ++e)
    lr[e] = static_cast<float>(0.05 * (1.0 + std::cos(std::numbers::pi * double(e) / double(E))));
  t.lr_schedule = std::move(lr);

  auto row = [&](std::size_t e, std::size_t n) { return t.probs.data() + (e * N + n) * C; };
  Rng rng(derive_seed(spec.seed, to_string(spec.scenario)));

  switch (spec.scenario) {
    case Scenario::constant: {
      for (std::size_t n = 0; n < N; ++n) {
        auto p = softmax(random_logits(rng, C, t.labels[n]));
        for (std::size_t e = 0; e < E; ++e)
          for (std::size_t c = 0; c < C; ++c) row(e, n)[c] = static_cast<float>(p[c]);
      }
      break;
    }
    case Scenario::random_walk: {
      for (std::size_t n = 0; n < N; ++n) {
        auto z = random_logits(rng, C, t.labels[n]);
        for (std::size_t e = 0; e < E; ++e) {
          auto p = softmax(z);
          for (std::size_t c = 0; c < C; ++c) row(e, n)[c] = static_cast<float>(p[c]);
          for (auto& v : z) v += 0.5 * rng.normal();
        }
      }
      break;
    }
    case Scenario::sl_clustered: {
      std::vector<float> teacher(N * C);
      for (std::size_t n = 0; n < N; ++n) {
        auto q = softmax(random_logits(rng, C, t.labels[n]));
        for (std::size_t c = 0; c < C; ++c) teacher[n * C + c] = static_cast<float>(q[c]);
        // Pull p towards the one-hot of the least likely class; that corner is
        // at distance >= 1 - 1/C from q, so the mixing weight stays below 1.
        const auto far = static_cast<std::size_t>(std::min_element(q.begin(), q.end()) - q.begin());
        double dist2 = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double d = (c == far ? 1.0 : 0.0) - q[c];
          dist2 += d * d;
        }
        const double dist = std::sqrt(dist2);
        for (std::size_t e = 0; e < E; ++e) {
          const double radius = 0.05 * (1.0 + 0.02 * std::clamp(rng.normal(), -3.0, 3.0));
          const double lambda = C > 1 ? radius / dist : 0.0;
          for (std::size_t c = 0; c < C; ++c)
            row(e, n)[c] = static_cast<float>((1.0 - lambda) * q[c] + lambda * (c == far ? 1.0 : 0.0));
        }
      }
      t.teacher_probs = std::move(teacher);
      break;
    }
    case Scenario::late_learner: {
      const auto roles = synthetic_roles(spec);
      std::vector<int> role(N, 0);
      for (auto n : roles.late_learners) role[n] = 1;
      for (auto n : roles.early_learners) role[n] = 2;
      const double third = double(E) / 3.0;
      for (std::size_t n = 0; n < N; ++n) {
        std::vector<double> rest(C, 0.0);
        double rest_sum = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          if (c != t.labels[n]) rest_sum += (rest[c] = 0.2 + rng.uniform());
        for (auto& w : rest) w = rest_sum > 0 ? w / rest_sum : 0.0;
        const std::uint32_t y = t.labels[n];
        if (C == 1) {
          for (std::size_t e = 0; e < E; ++e) row(e, n)[0] = 1.0f;
          continue;
        }
        const double lo = rng.uniform(0.03, 0.12);
        const double hi = rng.uniform(0.90, 0.97);
        // short runs squeeze the rise so both endpoints stay near lo / hi
        const double width =
            std::min(std::max(0.75, E / 15.0), std::max(1e-3, (double(E) - 1.0) / 8.0)) *
            rng.uniform(0.9, 1.1);
        double centre = std::min(2.0 * third, double(E) - 1.0 - 3.0 * width) + rng.uniform(-0.5, 0.5);
        if (3.0 * width <= double(E) - 1.0 - 3.0 * width)
          centre = std::clamp(centre, 3.0 * width, double(E) - 1.0 - 3.0 * width);
        const double level = rng.uniform(0.3, 0.95);
        for (std::size_t e = 0; e < E; ++e) {
          double target = level;
          if (role[n] == 1) {
            target = lo + (hi - lo) / (1.0 + std::exp(-(double(e) - centre) / width));
          } else if (role[n] == 2) {
            target = double(e) < third ? (e % 2 == 0 ? lo : hi) : hi;
          }
          fill_row(row(e, n), target, y, rest);
        }
      }
      break;
    }
  }
  t.reindex();
  t.validate();
  return t;
}

fs::path write_synthetic(const SyntheticSpec& spec, const fs::path& dir) {
  write_trajectory(make_synthetic(spec), dir);
  return dir;
}

}  // namespace ddkit
