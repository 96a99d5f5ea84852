#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddkit {

inline constexpr std::size_t kMinCorrelationRecords = 3;

// Average (mid) ranks, 1-based: ties share the mean of the ranks they span.
std::vector<double> midranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of midranks. Throws numerical error when either side
// is constant; validation error when n < 3 or lengths differ.
double spearman(std::span<const double> x, std::span<const double> y);

struct DCSRecord {
  std::string subset_id;
  double gen_error = 0.0;     // in [0, 1]
  double distill_loss = 0.0;
  std::size_t subset_size = 0;
};

struct DCSRecordSet {
  std::vector<DCSRecord> records;
  std::string objective;

  void validate() const;
};

struct DCSReport {
  double rho_raw = 0.0;
  std::optional<double> rho_adjusted;
  std::size_t n = 0;
  std::string notes;
};

// rho_raw = spearman(errors, losses). With adjust_size, ranked errors and
// losses are each residualized on ranked size (OLS with intercept) and the
// residuals correlated.
DCSReport dcs(const DCSRecordSet& records, bool adjust_size);

std::string dcs_report_json(const DCSReport& report, const std::string& objective);

// Lookup table of per-subset generalization errors, persisted as CSV
// `subset_id,gen_error,subset_size`. Writes replace the file atomically.
struct ErrorEntry {
  std::string subset_id;
  double gen_error = 0.0;
  std::size_t subset_size = 0;
};

class ErrorTable {
public:
  explicit ErrorTable(std::filesystem::path path);

  // Missing file reads as an empty table.
  std::vector<ErrorEntry> read() const;
  std::optional<ErrorEntry> find(const std::string& subset_id) const;

  // Inserts or updates by subset_id. A different subset_size for an existing
  // id is a conflict.
  void upsert(const std::string& subset_id, double gen_error, std::size_t subset_size);

  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

// Joins an error table and a `subset_id,loss` CSV into a record set.
DCSRecordSet join_records(const std::vector<ErrorEntry>& errors,
                          const std::filesystem::path& losses_csv, std::string objective);

}  // namespace ddkit
