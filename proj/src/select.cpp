#include "ddkit/select.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"
#include "ddkit/random.hpp"

namespace ddkit {

Order parse_order(const std::string& name) {
  if (name == "ascending" || name == "asc") return Order::ascending;
  if (name == "descending" || name == "desc") return Order::descending;
  throw Error(ErrorKind::validation, "order must be ascending or descending, got '" + name + "'");
}

void SubsetSpec::validate() const {
  if (sample_ids.size() != classes.size())
    throw Error(ErrorKind::validation, "subset ids and classes differ in length");
  std::set<std::string_view> seen;
  for (const auto& id : sample_ids)
    if (!seen.insert(id).second) throw Error(ErrorKind::validation, "duplicate id in subset: " + id);
  std::map<std::uint32_t, std::size_t> counts;
  for (auto c : classes) ++counts[c];
  if (counts != class_histogram)
    throw Error(ErrorKind::validation, "subset class histogram is stale");
  for (const auto& [c, n] : counts)
    if (n != ipc)
      throw Error(ErrorKind::validation, "class " + std::to_string(c) + " has " + std::to_string(n) +
                                             " samples, expected ipc=" + std::to_string(ipc));
}

namespace {

void append_class(SubsetSpec& s, const TrajectoryTensor& traj, std::uint32_t cls,
                  const std::vector<std::size_t>& picked) {
  for (auto n : picked) {
    s.sample_ids.push_back(traj.sample_ids[n]);
    s.classes.push_back(cls);
  }
  s.class_histogram[cls] = picked.size();
}

void check_capacity(const std::vector<std::vector<std::size_t>>& members, std::size_t ipc) {
  if (ipc == 0) throw Error(ErrorKind::validation, "ipc must be positive");
  for (std::size_t c = 0; c < members.size(); ++c)
    if (members[c].size() < ipc)
      throw Error(ErrorKind::validation, "class " + std::to_string(c) + " has only " +
                                             std::to_string(members[c].size()) +
                                             " samples, fewer than ipc=" + std::to_string(ipc));
}

// Class members sorted by score (ties by sample id ascending).
std::vector<std::vector<std::size_t>> ranked_members(const ScoreTable& scores,
                                                     const TrajectoryTensor& traj, Order order) {
  if (scores.sample_ids.size() != scores.scores.size())
    throw Error(ErrorKind::validation, "score table ids and values differ in length");
  std::vector<double> by_index(traj.num_samples, NAN);
  std::vector<bool> seen(traj.num_samples, false);
  for (std::size_t i = 0; i < scores.sample_ids.size(); ++i) {
    auto idx = traj.index_of(scores.sample_ids[i]);
    if (!idx) throw Error(ErrorKind::validation, "score for unknown sample '" + scores.sample_ids[i] + "'");
    if (seen[*idx]) throw Error(ErrorKind::validation, "duplicate score for '" + scores.sample_ids[i] + "'");
    if (!std::isfinite(scores.scores[i]))
      throw Error(ErrorKind::validation, "non-finite score for '" + scores.sample_ids[i] + "'");
    seen[*idx] = true;
    by_index[*idx] = scores.scores[i];
  }
  for (std::size_t n = 0; n < traj.num_samples; ++n)
    if (!seen[n]) throw Error(ErrorKind::validation, "no score for sample '" + traj.sample_ids[n] + "'");

  auto members = traj.class_members();
  for (auto& m : members) {
    std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      if (by_index[a] != by_index[b])
        return order == Order::ascending ? by_index[a] < by_index[b] : by_index[a] > by_index[b];
      return traj.sample_ids[a] < traj.sample_ids[b];
    });
  }
  return members;
}

}  // namespace

SubsetSpec select_random(const TrajectoryTensor& traj, std::size_t ipc, std::uint64_t seed) {
  auto members = traj.class_members();
  check_capacity(members, ipc);
  SubsetSpec s;
  s.ipc = ipc;
  s.provenance = {"random", "", 0.0, seed};
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto m = members[c];
    Rng rng(derive_seed(seed, "class:" + std::to_string(c)));
    rng.shuffle(m);
    m.resize(ipc);
    std::sort(m.begin(), m.end());
    append_class(s, traj, static_cast<std::uint32_t>(c), m);
  }
  s.validate();
  return s;
}

SubsetSpec select_window(const ScoreTable& scores, const TrajectoryTensor& traj, std::size_t ipc,
                         double start_quantile, Order order) {
  if (!(start_quantile >= 0.0 && start_quantile <= 1.0))
    throw Error(ErrorKind::validation, "start quantile must lie in [0, 1]");
  auto members = ranked_members(scores, traj, order);
  check_capacity(members, ipc);
  SubsetSpec s;
  s.ipc = ipc;
  s.provenance = {"window", scores.source_manifest_checksum, start_quantile, 0};
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    const auto start = static_cast<std::size_t>(std::floor(start_quantile * double(m.size() - ipc)));
    if (start + ipc > m.size()) throw Error(ErrorKind::validation, "window out of range");
    append_class(s, traj, static_cast<std::uint32_t>(c), {m.begin() + start, m.begin() + start + ipc});
  }
  s.validate();
  return s;
}

std::vector<SubsetSpec> sliding_window_enumerate(const ScoreTable& scores,
                                                 const TrajectoryTensor& traj, std::size_t ipc,
                                                 std::size_t stride) {
  if (stride == 0) throw Error(ErrorKind::validation, "stride must be positive");
  auto members = ranked_members(scores, traj, Order::ascending);
  check_capacity(members, ipc);
  std::size_t count = SIZE_MAX;
  for (const auto& m : members) count = std::min(count, (m.size() - ipc) / stride + 1);

  std::vector<SubsetSpec> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t offset = w * stride;
    SubsetSpec s;
    s.ipc = ipc;
    const double span = double(members.front().size() - ipc);
    s.provenance = {"sliding-window", scores.source_manifest_checksum,
                    span > 0 ? double(offset) / span : 0.0, 0};
    for (std::size_t c = 0; c < members.size(); ++c) {
      const auto& m = members[c];
      append_class(s, traj, static_cast<std::uint32_t>(c),
                   {m.begin() + offset, m.begin() + offset + ipc});
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t default_stride(const TrajectoryTensor& traj) {
  std::size_t smallest = SIZE_MAX;
  for (const auto& m : traj.class_members()) smallest = std::min(smallest, m.size());
  return std::max<std::size_t>(1, (smallest + 19) / 20);
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoInput>& points) {
  if (points.empty()) throw Error(ErrorKind::validation, "pareto analysis needs at least one point");
  std::map<std::size_t, std::size_t> best;  // ipc -> index
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0))
      throw Error(ErrorKind::validation, "accuracy must lie in [0, 1]");
    if (!(p.fraction > 0.0 && p.fraction <= 1.0))
      throw Error(ErrorKind::validation, "fraction f must lie in (0, 1]");
    auto [it, inserted] = best.emplace(p.ipc, i);
    if (inserted) continue;
    const auto& cur = points[it->second];
    if (p.accuracy > cur.accuracy || (p.accuracy == cur.accuracy && p.fraction < cur.fraction))
      it->second = i;
  }
  std::vector<ParetoPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out.push_back({points[i].ipc, points[i].fraction, points[i].accuracy, best.at(points[i].ipc) == i});
  return out;
}

void write_subset(const SubsetSpec& subset, const std::filesystem::path& csv) {
  subset.validate();
  std::string out = "sample_id,class\n";
  for (std::size_t i = 0; i < subset.sample_ids.size(); ++i)
    out += subset.sample_ids[i] + "," + std::to_string(subset.classes[i]) + "\n";
  nlohmann::ordered_json side;
  side["method"] = subset.provenance.method;
  side["score_ref"] = subset.provenance.score_ref;
  side["start"] = subset.provenance.start;
  side["seed"] = subset.provenance.seed;
  side["ipc"] = subset.ipc;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [c, n] : subset.class_histogram) hist[std::to_string(c)] = n;
  side["class_histogram"] = hist;
  io::write_atomic(csv, out);
  io::write_atomic(sidecar_path(csv), side.dump(2) + "\n");
}

SubsetSpec read_subset(const std::filesystem::path& csv) {
  const auto t = io::read_csv(csv);
  const auto id_col = t.column("sample_id");
  const auto cls_col = t.column("class");
  SubsetSpec s;
  for (const auto& row : t.rows) {
    const auto c = io::parse_int(row[cls_col], "class");
    if (c < 0) throw Error(ErrorKind::format, "negative class in " + csv.string());
    s.sample_ids.push_back(row[id_col]);
    s.classes.push_back(static_cast<std::uint32_t>(c));
    ++s.class_histogram[static_cast<std::uint32_t>(c)];
  }
  if (!s.class_histogram.empty()) s.ipc = s.class_histogram.begin()->second;
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    try {
      auto j = nlohmann::json::parse(io::read_text(side));
      s.provenance.method = j.value("method", "");
      s.provenance.score_ref = j.value("score_ref", "");
      s.provenance.start = j.value("start", 0.0);
      s.provenance.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, side.string() + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

std::vector<ParetoInput> read_pareto_points(const std::filesystem::path& csv) {
  const auto t = io::read_csv(csv);
  const auto ipc = t.column("ipc"), f = t.column("f"), acc = t.column("accuracy");
  std::vector<ParetoInput> out;
  for (const auto& row : t.rows) {
    const auto i = io::parse_int(row[ipc], "ipc");
    if (i <= 0) throw Error(ErrorKind::validation, "ipc must be positive");
    out.push_back({static_cast<std::size_t>(i), io::parse_double(row[f], "f"),
                   io::parse_double(row[acc], "accuracy")});
  }
  return out;
}

std::string pareto_csv(const std::vector<ParetoPoint>& points) {
  std::string out = "ipc,f,accuracy,is_frontier\n";
  for (const auto& p : points)
    out += std::to_string(p.ipc) + "," + io::fmt9(p.fraction) + "," + io::fmt9(p.accuracy) + "," +
           (p.is_frontier ? "1" : "0") + "\n";
  return out;
}

}  // namespace ddkit
