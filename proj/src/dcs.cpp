#include "ddkit/dcs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"

namespace ddkit {

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * double(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::validation, "correlation inputs differ in length");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw Error(ErrorKind::numerical, "correlation undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::validation, "correlation inputs differ in length");
  if (x.size() < kMinCorrelationRecords)
    throw Error(ErrorKind::validation, "correlation needs at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw Error(ErrorKind::validation, "correlation inputs must be finite");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson(rx, ry);
}

void DCSRecordSet::validate() const {
  if (records.size() < kMinCorrelationRecords)
    throw Error(ErrorKind::validation, "DCS needs at least 3 records");
  std::set<std::string_view> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.subset_id).second)
      throw Error(ErrorKind::validation, "duplicate subset id '" + r.subset_id + "'");
    if (!(r.gen_error >= 0.0 && r.gen_error <= 1.0))
      throw Error(ErrorKind::validation, "gen_error of '" + r.subset_id + "' outside [0, 1]");
    if (!std::isfinite(r.distill_loss))
      throw Error(ErrorKind::validation, "non-finite loss for '" + r.subset_id + "'");
    if (r.subset_size == 0)
      throw Error(ErrorKind::validation, "subset size of '" + r.subset_id + "' must be positive");
  }
}

namespace {

// Residuals of y regressed on x with intercept; nullopt when x is constant.
std::optional<std::vector<double>> residualize(const std::vector<double>& y,
                                               const std::vector<double>& x) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double slope = sxy / sxx;
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = (y[i] - my) - slope * (x[i] - mx);
  return r;
}

}  // namespace

DCSReport dcs(const DCSRecordSet& set, bool adjust_size) {
  set.validate();
  std::vector<double> err, loss, size;
  for (const auto& r : set.records) {
    err.push_back(r.gen_error);
    loss.push_back(r.distill_loss);
    size.push_back(double(r.subset_size));
  }
  DCSReport rep;
  rep.n = set.records.size();
  rep.rho_raw = spearman(err, loss);
  rep.notes = "spearman with midrank ties";
  if (!adjust_size) return rep;

  const auto re = midranks(err), rl = midranks(loss), rs = midranks(size);
  const auto res_e = residualize(re, rs);
  const auto res_l = residualize(rl, rs);
  if (!res_e || !res_l) {
    rep.notes += "; size adjustment skipped: all subset sizes equal";
    return rep;
  }
  // A side that size explains completely has nothing left to correlate.
  auto explained = [](const std::vector<double>& resid, const std::vector<double>& ranks) {
    const double m = std::accumulate(ranks.begin(), ranks.end(), 0.0) / double(ranks.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      ss_res += resid[i] * resid[i];
      ss_tot += (ranks[i] - m) * (ranks[i] - m);
    }
    return ss_res <= 1e-20 * ss_tot;
  };
  if (explained(*res_e, re) || explained(*res_l, rl)) {
    rep.rho_adjusted = 0.0;
    rep.notes += "; size-adjusted by rank residualization (one side fully explained by size, reported as 0)";
    return rep;
  }
  try {
    rep.rho_adjusted = pearson(*res_e, *res_l);
    rep.notes += "; size-adjusted by rank residualization";
  } catch (const Error&) {
    rep.notes += "; size adjustment skipped: residuals are constant";
  }
  return rep;
}

std::string dcs_report_json(const DCSReport& report, const std::string& objective) {
  // Hand-rolled so numbers use the same 9-significant-digit rendering as CSVs.
  std::string out = "{\"objective\":" + nlohmann::json(objective).dump();
  out += ",\"n\":" + std::to_string(report.n);
  out += ",\"rho_raw\":" + io::fmt9(report.rho_raw);
  out += ",\"rho_adjusted\":" + (report.rho_adjusted ? io::fmt9(*report.rho_adjusted) : "null");
  out += ",\"notes\":" + nlohmann::json(report.notes).dump() + "}";
  return out;
}

ErrorTable::ErrorTable(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<ErrorEntry> ErrorTable::read() const {
  if (!std::filesystem::exists(path_)) return {};
  const auto t = io::read_csv(path_);
  const auto id = t.column("subset_id"), e = t.column("gen_error"), s = t.column("subset_size");
  std::vector<ErrorEntry> out;
  for (const auto& row : t.rows) {
    const auto size = io::parse_int(row[s], "subset_size");
    if (size <= 0) throw Error(ErrorKind::format, path_.string() + ": subset_size must be positive");
    out.push_back({row[id], io::parse_double(row[e], "gen_error"), static_cast<std::size_t>(size)});
  }
  return out;
}

std::optional<ErrorEntry> ErrorTable::find(const std::string& subset_id) const {
  for (auto& e : read())
    if (e.subset_id == subset_id) return e;
  return std::nullopt;
}

void ErrorTable::upsert(const std::string& subset_id, double gen_error, std::size_t subset_size) {
  if (subset_id.empty() || subset_id.find_first_of(",\n\r") != std::string::npos)
    throw Error(ErrorKind::validation, "invalid subset id '" + subset_id + "'");
  if (!(gen_error >= 0.0 && gen_error <= 1.0))
    throw Error(ErrorKind::validation, "gen_error must lie in [0, 1]");
  if (subset_size == 0) throw Error(ErrorKind::validation, "subset_size must be positive");
  auto entries = read();
  bool found = false;
  for (auto& e : entries) {
    if (e.subset_id != subset_id) continue;
    if (e.subset_size != subset_size)
      throw Error(ErrorKind::conflict, "subset '" + subset_id + "' is recorded with size " +
                                           std::to_string(e.subset_size) + ", not " +
                                           std::to_string(subset_size));
    e.gen_error = gen_error;
    found = true;
  }
  if (!found) entries.push_back({subset_id, gen_error, subset_size});
  std::string out = "subset_id,gen_error,subset_size\n";
  for (const auto& e : entries)
    out += e.subset_id + "," + io::fmt9(e.gen_error) + "," + std::to_string(e.subset_size) + "\n";
  io::write_atomic(path_, out);
}

DCSRecordSet join_records(const std::vector<ErrorEntry>& errors,
                          const std::filesystem::path& losses_csv, std::string objective) {
  const auto t = io::read_csv(losses_csv);
  const auto id = t.column("subset_id"), l = t.column("loss");
  std::map<std::string, double> losses;
  for (const auto& row : t.rows)
    if (!losses.emplace(row[id], io::parse_double(row[l], "loss")).second)
      throw Error(ErrorKind::validation, "duplicate subset id '" + row[id] + "' in " + losses_csv.string());
  DCSRecordSet set;
  set.objective = std::move(objective);
  std::set<std::string> used;
  for (const auto& e : errors) {
    auto it = losses.find(e.subset_id);
    if (it == losses.end())
      throw Error(ErrorKind::validation, "subset '" + e.subset_id + "' has no distillation loss");
    set.records.push_back({e.subset_id, e.gen_error, it->second, e.subset_size});
    used.insert(e.subset_id);
  }
  for (const auto& [k, _] : losses)
    if (!used.count(k)) throw Error(ErrorKind::validation, "subset '" + k + "' has no error entry");
  return set;
}

}  // namespace ddkit
