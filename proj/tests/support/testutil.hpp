#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "ddkit/io.hpp"
#include "ddkit/trajstore.hpp"

namespace ddkit::test {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ddkit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

// Two-class trajectory where sample n has label labels[n] and target
// probability series[n][e].
inline TrajectoryTensor two_class_traj(const std::vector<std::vector<double>>& series,
                                       std::vector<std::uint32_t> labels = {}) {
  TrajectoryTensor t;
  t.num_samples = series.size();
  t.num_epochs = series.at(0).size();
  t.num_classes = 2;
  if (labels.empty()) labels.assign(t.num_samples, 0);
  t.labels = labels;
  t.probs.resize(t.num_epochs * t.num_samples * 2);
  for (std::size_t e = 0; e < t.num_epochs; ++e)
    for (std::size_t n = 0; n < t.num_samples; ++n) {
      float* row = t.probs.data() + (e * t.num_samples + n) * 2;
      const float p = float(series[n][e]);
      row[labels[n]] = p;
      row[1 - labels[n]] = 1.0f - p;
    }
  for (std::size_t n = 0; n < t.num_samples; ++n) t.sample_ids.push_back(synthetic_sample_id(n));
  t.reindex();
  return t;
}

inline std::string slurp(const fs::path& p) { return io::read_text(p); }

// Runs a shell command, returns its exit status.
inline int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace ddkit::test
