#include "ddkit/ca2d.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <unistd.h>

#include "json.hpp"

#include "ddkit/error.hpp"
#include "ddkit/io.hpp"
#include "ddkit/parallel.hpp"
#include "ddkit/random.hpp"

namespace ddkit {

namespace fs = std::filesystem;

void CropParams::validate() const {
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0))
    throw Error(ErrorKind::validation, "crop scale range must satisfy 0 < min <= max <= 1");
  if (!(aspect_min > 0.0 && aspect_min <= aspect_max && std::isfinite(aspect_max)))
    throw Error(ErrorKind::validation, "crop aspect range must satisfy 0 < min <= max");
}

std::vector<PatchCandidate> generate_candidates(const std::string& sample_id, const Image& image,
                                                std::size_t num_candidates, const CropParams& crop,
                                                std::uint64_t seed) {
  crop.validate();
  if (num_candidates < 1) throw Error(ErrorKind::validation, "need at least one candidate");
  const int W = image.width, H = image.height;
  if (W < kMinPatchSide || H < kMinPatchSide)
    throw Error(ErrorKind::validation, "image '" + sample_id + "' is smaller than " +
                                           std::to_string(kMinPatchSide) + "x" +
                                           std::to_string(kMinPatchSide));
  const std::uint64_t lineage = derive_seed(seed, sample_id);
  Rng rng(lineage);
  const double area = double(W) * double(H);
  const double log_lo = std::log(crop.aspect_min), log_hi = std::log(crop.aspect_max);

  std::vector<PatchCandidate> out;
  for (std::size_t i = 0; i < num_candidates; ++i) {
    const double target = rng.uniform(crop.scale_min, crop.scale_max) * area;
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    double w = std::sqrt(target * aspect), h = std::sqrt(target / aspect);
    if (w > W) {
      w = W;
      h = target / W;
    }
    if (h > H) {
      h = H;
      w = target / H;
    }
    Rect r;
    r.w = std::clamp(int(std::lround(w)), kMinPatchSide, W);
    r.h = std::clamp(int(std::lround(h)), kMinPatchSide, H);
    r.x = int(rng.below(std::uint64_t(W - r.w + 1)));
    r.y = int(rng.below(std::uint64_t(H - r.h + 1)));
    const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& c) { return c.rect == r; });
    if (dup) continue;
    out.push_back({sample_id, out.size(), r, 0.0, lineage});
  }
  return out;
}

PatchScorer PatchScorer::sharpness() { return PatchScorer{}; }

PatchScorer PatchScorer::from_file(const fs::path& csv) {
  const auto t = io::read_csv(csv);
  const auto id = t.column("sample_id"), idx = t.column("patch_index"), sc = t.column("score");
  PatchScorer s;
  s.kind = Kind::file_scores;
  for (const auto& row : t.rows) {
    const auto i = io::parse_int(row[idx], "patch_index");
    const double v = io::parse_double(row[sc], "score");
    if (i < 0 || !std::isfinite(v))
      throw Error(ErrorKind::format, csv.string() + ": bad patch index or score");
    s.file_scores[{row[id], std::size_t(i)}] = v;
  }
  return s;
}

PatchScorer PatchScorer::external(std::string command) {
  if (command.empty()) throw Error(ErrorKind::validation, "empty scorer command");
  PatchScorer s;
  s.kind = Kind::external_command;
  s.command = std::move(command);
  return s;
}

PatchScorer PatchScorer::parse(const std::string& spec) {
  if (spec == "sharpness" || spec == "sharpness_heuristic") return sharpness();
  if (spec.rfind("file:", 0) == 0) return from_file(spec.substr(5));
  if (spec.rfind("cmd:", 0) == 0) return external(spec.substr(4));
  throw Error(ErrorKind::validation, "scorer must be sharpness, file:<csv> or cmd:<command>");
}

namespace {

std::vector<double> run_external(const std::string& command,
                                 const std::vector<PatchCandidate>& candidates) {
  static std::atomic<unsigned> counter{0};
  const auto tmp = fs::temp_directory_path() /
                   ("ddkit_candidates_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++) + ".csv");
  std::string input;
  for (const auto& c : candidates)
    input += c.sample_id + "," + std::to_string(c.patch_index) + "," + std::to_string(c.rect.x) +
             "," + std::to_string(c.rect.y) + "," + std::to_string(c.rect.w) + "," +
             std::to_string(c.rect.h) + "\n";
  io::write_atomic(tmp, input);
  const std::string cmd = "(" + command + ") < '" + tmp.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    fs::remove(tmp);
    throw Error(ErrorKind::io, "cannot start scorer command");
  }
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
  const int status = ::pclose(pipe);
  std::error_code ec;
  fs::remove(tmp, ec);
  if (status != 0)
    throw Error(ErrorKind::io, "scorer command exited with status " + std::to_string(status));

  std::vector<double> scores;
  std::size_t pos = 0;
  while (pos < output.size()) {
    auto end = output.find('\n', pos);
    if (end == std::string::npos) end = output.size();
    std::string line = output.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const double v = io::parse_double(line, "scorer output");
    if (!std::isfinite(v)) throw Error(ErrorKind::format, "scorer printed a non-finite score");
    scores.push_back(v);
  }
  if (scores.size() != candidates.size())
    throw Error(ErrorKind::format, "scorer printed " + std::to_string(scores.size()) +
                                       " scores for " + std::to_string(candidates.size()) +
                                       " candidates");
  return scores;
}

bool candidate_before(const PatchCandidate& a, const PatchCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
  return a.patch_index < b.patch_index;
}

}  // namespace

void score_patches(std::vector<PatchCandidate>& candidates, const PatchScorer& scorer,
                   const ImageLookup& images, unsigned jobs) {
  switch (scorer.kind) {
    case PatchScorer::Kind::sharpness_heuristic:
      parallel_for(candidates.size(), jobs, [&](std::size_t i) {
        auto& c = candidates[i];
        c.score = laplacian_variance(images(c.sample_id), c.rect);
      });
      break;
    case PatchScorer::Kind::file_scores:
      for (auto& c : candidates) {
        auto it = scorer.file_scores.find({c.sample_id, c.patch_index});
        if (it == scorer.file_scores.end())
          throw Error(ErrorKind::validation, "no score for patch " + std::to_string(c.patch_index) +
                                                 " of '" + c.sample_id + "'");
        c.score = it->second;
      }
      break;
    case PatchScorer::Kind::external_command: {
      const auto scores = run_external(scorer.command, candidates);
      for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].score = scores[i];
      break;
    }
  }
  for (const auto& c : candidates)
    if (!std::isfinite(c.score)) throw Error(ErrorKind::numerical, "non-finite patch score");
  std::sort(candidates.begin(), candidates.end(), candidate_before);
}

DistilledImageSet assemble(const SubsetSpec& subset, const std::vector<PatchCandidate>& scored,
                           const ImageLookup& images, std::size_t factor, int resolution,
                           std::size_t ipc, unsigned jobs) {
  if (factor < 1) throw Error(ErrorKind::validation, "factor f must be >= 1");
  if (ipc < 1) throw Error(ErrorKind::validation, "ipc must be >= 1");
  if (resolution < 1 || resolution % int(factor) != 0)
    throw Error(ErrorKind::validation, "resolution R=" + std::to_string(resolution) +
                                           " is not divisible by f=" + std::to_string(factor));
  const std::size_t per_image = factor * factor;
  const std::size_t needed = ipc * per_image;
  const int cell = resolution / int(factor);

  std::map<std::string, std::uint32_t> class_of;
  for (std::size_t i = 0; i < subset.sample_ids.size(); ++i)
    class_of[subset.sample_ids[i]] = subset.classes[i];

  // Best patch per source image; highest score, then lowest patch index.
  std::map<std::string, PatchCandidate> top;
  for (const auto& c : scored) {
    if (!class_of.count(c.sample_id)) continue;
    auto [it, inserted] = top.emplace(c.sample_id, c);
    if (inserted) continue;
    auto& cur = it->second;
    if (c.score > cur.score || (c.score == cur.score && c.patch_index < cur.patch_index)) cur = c;
  }

  std::map<std::uint32_t, std::vector<PatchCandidate>> per_class;
  for (const auto& [c, _] : subset.class_histogram) per_class[c];
  for (auto& [id, patch] : top) per_class[class_of.at(id)].push_back(patch);

  DistilledImageSet set;
  set.factor = factor;
  set.resolution = resolution;
  set.ipc = ipc;
  for (auto& [cls, patches] : per_class) {
    if (patches.size() < needed)
      throw Error(ErrorKind::validation, "class " + std::to_string(cls) + " has " +
                                             std::to_string(patches.size()) +
                                             " scored images, needs ipc*f^2=" + std::to_string(needed));
    std::sort(patches.begin(), patches.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.sample_id < b.sample_id;
    });
    for (std::size_t g = 0; g < ipc; ++g) {
      DistilledImage img;
      img.cls = cls;
      img.index = g;
      img.filename = "class_" + std::to_string(cls) + "_ipc_" + std::to_string(g) + ".png";
      img.patches.assign(patches.begin() + g * per_image, patches.begin() + (g + 1) * per_image);
      set.images.push_back(std::move(img));
    }
  }

  parallel_for(set.images.size(), jobs, [&](std::size_t i) {
    auto& img = set.images[i];
    img.pixels = Image(resolution, resolution);
    for (std::size_t k = 0; k < img.patches.size(); ++k) {
      const auto& p = img.patches[k];
      const auto tile = resize_bilinear(images(p.sample_id), p.rect, cell, cell);
      blit(img.pixels, tile, int(k % factor) * cell, int(k / factor) * cell);
    }
  });
  return set;
}

std::map<std::string, fs::path> resolve_images(const std::vector<std::string>& ids,
                                               const fs::path& image_dir) {
  if (!fs::is_directory(image_dir))
    throw Error(ErrorKind::missing_file, "image directory not found: " + image_dir.string());
  static const std::set<std::string> kExt = {".png", ".jpg", ".jpeg", ".PNG", ".JPG", ".JPEG"};
  std::map<std::string, fs::path> by_stem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(image_dir))
    if (entry.is_regular_file() && kExt.count(entry.path().extension().string()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) by_stem.emplace(f.stem().string(), f);

  std::map<std::string, fs::path> out;
  std::vector<std::string> missing;
  for (const auto& id : ids) {
    auto it = by_stem.find(id);
    if (it == by_stem.end())
      missing.push_back(id);
    else
      out.emplace(id, it->second);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " sample ids have no image in " +
                      image_dir.string() + ":";
    for (const auto& id : missing) msg += " " + id;
    throw Error(ErrorKind::missing_file, msg);
  }
  return out;
}

Ca2dResult distill_subset(const SubsetSpec& coreset, const fs::path& image_dir,
                          const PatchScorer& scorer, const DistillOptions& opt) {
  coreset.validate();
  const auto paths = resolve_images(coreset.sample_ids, image_dir);
  std::vector<std::string> ids(coreset.sample_ids);
  std::vector<Image> loaded(ids.size());
  parallel_for(ids.size(), opt.jobs, [&](std::size_t i) { loaded[i] = load_image(paths.at(ids[i])); });
  std::map<std::string, const Image*> lookup_map;
  for (std::size_t i = 0; i < ids.size(); ++i) lookup_map[ids[i]] = &loaded[i];
  const ImageLookup lookup = [&](const std::string& id) -> const Image& {
    auto it = lookup_map.find(id);
    if (it == lookup_map.end()) throw Error(ErrorKind::validation, "no image for '" + id + "'");
    return *it->second;
  };

  std::vector<std::vector<PatchCandidate>> per_image(ids.size());
  parallel_for(ids.size(), opt.jobs, [&](std::size_t i) {
    per_image[i] = generate_candidates(ids[i], loaded[i], opt.num_candidates, opt.crop, opt.seed);
  });
  Ca2dResult result;
  for (auto& v : per_image)
    result.candidates.insert(result.candidates.end(), v.begin(), v.end());
  score_patches(result.candidates, scorer, lookup, opt.jobs);
  result.set = assemble(coreset, result.candidates, lookup, opt.factor, opt.resolution, opt.ipc, opt.jobs);
  result.coreset = coreset;
  return result;
}

Ca2dResult ca2d_pipeline(const TrajectoryTensor& traj, const fs::path& image_dir,
                         const ScoreParams& cad_params, const PatchScorer& scorer,
                         const DistillOptions& options, double start_quantile, CadBase base) {
  if (options.factor < 1 || options.ipc < 1)
    throw Error(ErrorKind::validation, "factor and ipc must be >= 1");
  if (options.resolution < 1 || options.resolution % int(options.factor) != 0)
    throw Error(ErrorKind::validation, "resolution must be divisible by the factor");
  resolve_images(traj.sample_ids, image_dir);
  const auto cad = cad_prune(traj, cad_params, base, options.jobs);
  auto coreset = select_window(cad, traj, options.ipc * options.factor * options.factor,
                               start_quantile, Order::descending);
  coreset.provenance.method = "cad-window";
  coreset.provenance.seed = options.seed;
  return distill_subset(coreset, image_dir, scorer, options);
}

void write_distilled_set(const Ca2dResult& result, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw Error(ErrorKind::io, "cannot create " + out_dir.string());
  const auto& set = result.set;
  nlohmann::ordered_json j;
  j["factor"] = set.factor;
  j["resolution"] = set.resolution;
  j["ipc"] = set.ipc;
  j["coreset"] = {{"method", result.coreset.provenance.method},
                  {"score_ref", result.coreset.provenance.score_ref},
                  {"start", result.coreset.provenance.start},
                  {"seed", result.coreset.provenance.seed},
                  {"sample_ids", result.coreset.sample_ids}};
  j["images"] = nlohmann::ordered_json::array();
  for (const auto& img : set.images) {
    write_png(img.pixels, out_dir / img.filename);
    nlohmann::ordered_json item;
    item["class"] = img.cls;
    item["file"] = img.filename;
    item["patches"] = nlohmann::ordered_json::array();
    for (const auto& p : img.patches) {
      nlohmann::ordered_json pj;
      pj["sample_id"] = p.sample_id;
      pj["patch_index"] = p.patch_index;
      pj["rect"] = {p.rect.x, p.rect.y, p.rect.w, p.rect.h};
      pj["score"] = std::stod(io::fmt9(p.score));
      pj["seed_lineage"] = p.seed_lineage;
      item["patches"].push_back(pj);
    }
    j["images"].push_back(item);
  }
  io::write_atomic(out_dir / "provenance.json", j.dump(2) + "\n");
}

Image make_toy_image(const std::string& sample_id, std::uint32_t cls, int size, std::uint64_t seed) {
  if (size < kMinPatchSide) throw Error(ErrorKind::validation, "toy images need size >= 8");
  Rng rng(derive_seed(seed, "toy:" + sample_id));
  Image img(size, size);
  const double hue = std::fmod(0.618034 * cls, 1.0);
  auto channel = [&](double phase) {
    return 0.5 + 0.35 * std::cos(2.0 * 3.141592653589793 * (hue + phase));
  };
  const double base[3] = {channel(0.0), channel(1.0 / 3.0), channel(2.0 / 3.0)};
  const double freq = rng.uniform(0.05, 0.6);
  const double amp = rng.uniform(0.0, 0.25);
  const double angle = rng.uniform(0.0, 3.141592653589793);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double wave = amp * std::sin(freq * (ca * x + sa * y));
      auto* p = img.px(x, y);
      for (int c = 0; c < 3; ++c)
        p[c] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(base[c] + wave, 0.0, 1.0)));
    }
  const int blobs = 2 + int(rng.below(5));
  for (int b = 0; b < blobs; ++b) {
    const int w = 2 + int(rng.below(std::uint64_t(size / 2))), h = 2 + int(rng.below(std::uint64_t(size / 2)));
    const int x0 = int(rng.below(std::uint64_t(size - w + 1))), y0 = int(rng.below(std::uint64_t(size - h + 1)));
    std::uint8_t col[3];
    for (auto& c : col) c = static_cast<std::uint8_t>(rng.below(256));
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) std::copy_n(col, 3, img.px(x, y));
  }
  return img;
}

void write_toy_images(const TrajectoryTensor& traj, const fs::path& dir, int size, std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "cannot create " + dir.string());
  for (std::size_t n = 0; n < traj.num_samples; ++n)
    write_png(make_toy_image(traj.sample_ids[n], traj.labels[n], size, seed),
              dir / (traj.sample_ids[n] + ".png"));
}

}  // namespace ddkit
