#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ddkit/image.hpp"
#include "ddkit/scores.hpp"
#include "ddkit/select.hpp"
#include "ddkit/trajstore.hpp"

namespace ddkit {

inline constexpr int kMinPatchSide = 8;

struct CropParams {
  double scale_min = 0.08;
  double scale_max = 1.0;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;

  void validate() const;
};

struct PatchCandidate {
  std::string sample_id;
  std::size_t patch_index = 0;
  Rect rect;
  double score = 0.0;
  std::uint64_t seed_lineage = 0;
};

// Random resized crops of one image, deterministic in (sample_id, seed).
// Each rectangle keeps the sampled area fraction; the aspect ratio is
// clipped when the ideal rectangle would leave the image. Duplicate
// rectangles are dropped, so fewer than `num_candidates` may come back.
std::vector<PatchCandidate> generate_candidates(const std::string& sample_id, const Image& image,
                                                std::size_t num_candidates, const CropParams& crop,
                                                std::uint64_t seed);

struct PatchScorer {
  enum class Kind { file_scores, sharpness_heuristic, external_command };

  Kind kind = Kind::sharpness_heuristic;
  std::map<std::pair<std::string, std::size_t>, double> file_scores;
  std::string command;

  static PatchScorer sharpness();
  // CSV `sample_id,patch_index,score`.
  static PatchScorer from_file(const std::filesystem::path& csv);
  // Candidates are piped as `sample_id,patch_index,x,y,w,h` lines; the command
  // prints one score per line.
  static PatchScorer external(std::string command);
  // "sharpness", "file:<csv>" or "cmd:<shell command>".
  static PatchScorer parse(const std::string& spec);
};

using ImageLookup = std::function<const Image&(const std::string& sample_id)>;

// Scores every candidate and sorts by score descending, ties by
// (sample_id, patch_index) ascending.
void score_patches(std::vector<PatchCandidate>& candidates, const PatchScorer& scorer,
                   const ImageLookup& images, unsigned jobs = 1);

struct DistilledImage {
  std::uint32_t cls = 0;
  std::size_t index = 0;  // g within the class
  std::string filename;   // class_<c>_ipc_<g>.png
  std::vector<PatchCandidate> patches;  // f*f, row-major grid order
  Image pixels;
};

struct DistilledImageSet {
  std::size_t factor = 1;
  int resolution = 0;
  std::size_t ipc = 0;
  std::vector<DistilledImage> images;
};

// Keeps each source image's best patch, ranks images per class by that score,
// and stitches consecutive groups of f*f into R x R grids.
DistilledImageSet assemble(const SubsetSpec& subset, const std::vector<PatchCandidate>& scored,
                           const ImageLookup& images, std::size_t factor, int resolution,
                           std::size_t ipc, unsigned jobs = 1);

struct DistillOptions {
  std::size_t factor = 1;
  int resolution = 224;
  std::size_t ipc = 1;
  std::size_t num_candidates = 16;
  CropParams crop;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct Ca2dResult {
  DistilledImageSet set;
  SubsetSpec coreset;
  std::vector<PatchCandidate> candidates;  // scored and sorted
};

// Maps sample ids to image files (PNG/JPEG keyed by stem). Every id must
// resolve; unresolved ids are reported together.
std::map<std::string, std::filesystem::path> resolve_images(const std::vector<std::string>& ids,
                                                            const std::filesystem::path& image_dir);

// Generate, score and assemble from an existing coreset.
Ca2dResult distill_subset(const SubsetSpec& coreset, const std::filesystem::path& image_dir,
                          const PatchScorer& scorer, const DistillOptions& options);

// CAD-Prune, then a class-balanced window of ipc*f^2 per class (descending CAD
// starting at `start_quantile`), then distill_subset.
Ca2dResult ca2d_pipeline(const TrajectoryTensor& traj, const std::filesystem::path& image_dir,
                         const ScoreParams& cad_params, const PatchScorer& scorer,
                         const DistillOptions& options, double start_quantile = 0.0,
                         CadBase base = CadBase::el2n);

// PNGs plus provenance.json into `out_dir`.
void write_distilled_set(const Ca2dResult& result, const std::filesystem::path& out_dir);

// Procedural class-tinted textures for desk-scale runs: `<sample_id>.png`.
Image make_toy_image(const std::string& sample_id, std::uint32_t cls, int size, std::uint64_t seed);
void write_toy_images(const TrajectoryTensor& traj, const std::filesystem::path& dir, int size,
                      std::uint64_t seed);

}  // namespace ddkit
