#include "ddkit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddkit/ca2d.hpp"
#include "ddkit/dcs.hpp"
#include "ddkit/error.hpp"
#include "ddkit/io.hpp"
#include "ddkit/objectives.hpp"
#include "ddkit/scaling.hpp"
#include "ddkit/scores.hpp"
#include "ddkit/select.hpp"
#include "ddkit/trajstore.hpp"

namespace ddkit::cli {

namespace fs = std::filesystem;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned jobs = 1;
  Level level = Level::warn;

  void log(Level l, const std::string& msg) const {
    if (l <= level) err << "ddkit: " << msg << '\n';
  }
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("DDKIT_SEED"); s && *s) {
    try {
      return static_cast<std::uint64_t>(io::parse_int(s, "DDKIT_SEED"));
    } catch (const Error&) {
      throw Error(ErrorKind::validation, std::string("DDKIT_SEED is not an integer: ") + s);
    }
  }
  return 0;
}

// Report text goes to `path` atomically, or to stdout when no path is given.
void emit(const Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty())
    ctx.out << text;
  else
    io::write_atomic(path, text);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::validation, msg);
}

// ---------------------------------------------------------------- synth-traj
struct SynthArgs {
  std::string out;
  std::size_t epochs = 30, samples = 1000, classes = 10;
  std::optional<std::uint64_t> seed;
  std::string scenario = "late-learner";
  std::string images;
  int image_size = 32;
};

void run_synth(const Context& ctx, const SynthArgs& a) {
  require(a.epochs >= 1 && a.samples >= 1 && a.classes >= 1, "E, N, C must be >= 1");
  require(a.images.empty() || a.image_size >= kMinPatchSide, "image size must be >= 8");
  SyntheticSpec spec{a.epochs, a.samples, a.classes, a.seed.value_or(default_seed()),
                     parse_scenario(a.scenario)};
  const auto traj = make_synthetic(spec);
  const auto checksum = write_trajectory(traj, a.out);
  if (!a.images.empty()) write_toy_images(traj, a.images, a.image_size, spec.seed);
  ctx.log(Level::info, "wrote " + a.out);
  ctx.out << "{\"path\":" << nlohmann::json(a.out).dump() << ",\"manifest_checksum\":\"" << checksum
          << "\"}\n";
}

// ------------------------------------------------------------------ validate
struct ValidateArgs {
  std::string traj;
  std::string params;
};

void run_validate(const Context& ctx, const ValidateArgs& a) {
  nlohmann::ordered_json j;
  if (!a.traj.empty()) {
    const auto t = load_trajectory(a.traj);
    j["E"] = t.num_epochs;
    j["N"] = t.num_samples;
    j["C"] = t.num_classes;
    j["has_teacher"] = t.teacher_probs.has_value();
    j["has_lr"] = t.lr_schedule.has_value();
    j["manifest_checksum"] = t.manifest_checksum;
  }
  if (!a.params.empty()) {
    const auto entries = read_param_index(a.params);
    for (const auto& e : entries) load_indexed_param(a.params, e.tag);
    j["param_vectors"] = entries.size();
  }
  require(!j.empty(), "validate needs --traj and/or --params");
  j["status"] = "ok";
  ctx.out << j.dump() << '\n';
}

// --------------------------------------------------------------------- score
struct ScoreArgs {
  std::string traj, method = "el2n", out, cad_base = "el2n";
  double T = 1.0;
  std::size_t J = 6, W = 2;
  std::optional<std::size_t> K, epoch_start, epoch_end;
};

void run_score(const Context& ctx, const ScoreArgs& a) {
  const auto method = parse_score_method(a.method);
  const auto base = parse_cad_base(a.cad_base);
  require(a.T > 0.0, "--T must be positive");
  require(a.J >= 2, "--J must be >= 2");
  require(a.W >= 1, "--W must be >= 1");
  const auto traj = load_trajectory(a.traj);
  std::optional<EpochRange> range;
  if (a.epoch_start || a.epoch_end)
    range = EpochRange{a.epoch_start.value_or(0), a.epoch_end.value_or(traj.num_epochs - 1)};
  ScoreTable table;
  switch (method) {
    case ScoreMethod::el2n: table = el2n(traj, range, ctx.jobs); break;
    case ScoreMethod::el2n_sl: table = el2n_sl(traj, a.T, range, ctx.jobs); break;
    case ScoreMethod::forgetting: table = forgetting(traj, ctx.jobs); break;
    case ScoreMethod::dyn_unc: table = dyn_unc(traj, a.J, ctx.jobs); break;
    case ScoreMethod::cad: {
      ScoreParams p{a.T, a.J, a.W, a.K.value_or(traj.num_epochs)};
      table = cad_prune(traj, p, base, ctx.jobs);
      break;
    }
  }
  if (a.out.empty())
    ctx.out << score_table_csv(table);
  else
    write_score_table(table, a.out);
}

// -------------------------------------------------------------------- select
struct SelectArgs {
  std::string traj, method = "window", scores, order = "ascending", out;
  std::size_t ipc = 1;
  double start_quantile = 0.0;
  std::optional<std::uint64_t> seed;
};

void run_select(const Context& ctx, const SelectArgs& a) {
  require(a.ipc >= 1, "--ipc must be >= 1");
  require(a.start_quantile >= 0.0 && a.start_quantile <= 1.0, "--start-quantile must lie in [0, 1]");
  const auto order = parse_order(a.order);
  const auto traj = load_trajectory(a.traj);
  SubsetSpec s;
  if (a.method == "random") {
    s = select_random(traj, a.ipc, a.seed.value_or(default_seed()));
  } else if (a.method == "window") {
    require(!a.scores.empty(), "--method window needs --scores");
    auto table = read_score_table(a.scores);
    s = select_window(table, traj, a.ipc, a.start_quantile, order);
    s.provenance.score_ref = fs::path(a.scores).filename().string();
  } else {
    throw Error(ErrorKind::validation, "select method must be random or window");
  }
  write_subset(s, a.out);
  ctx.log(Level::info, "selected " + std::to_string(s.sample_ids.size()) + " samples");
}

// ------------------------------------------------------------ sliding-window
struct SlidingArgs {
  std::string traj, scores, out_dir;
  std::size_t ipc = 1;
  std::optional<std::size_t> stride;
};

void run_sliding(const Context& ctx, const SlidingArgs& a) {
  require(a.ipc >= 1, "--ipc must be >= 1");
  require(!a.stride || *a.stride >= 1, "--stride must be >= 1");
  const auto traj = load_trajectory(a.traj);
  const auto table = read_score_table(a.scores);
  const auto stride = a.stride.value_or(default_stride(traj));
  const auto windows = sliding_window_enumerate(table, traj, a.ipc, stride);
  std::string index = "window,offset,start_quantile,file\n";
  fs::create_directories(a.out_dir);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    char name[32];
    std::snprintf(name, sizeof name, "window_%04zu.csv", w);
    auto s = windows[w];
    s.provenance.score_ref = fs::path(a.scores).filename().string();
    write_subset(s, fs::path(a.out_dir) / name);
    index += std::to_string(w) + "," + std::to_string(w * stride) + "," + io::fmt9(s.provenance.start) +
             "," + name + "\n";
  }
  io::write_atomic(fs::path(a.out_dir) / "windows.csv", index);
  ctx.log(Level::info, std::to_string(windows.size()) + " windows, stride " + std::to_string(stride));
}

// -------------------------------------------------------------------- pareto
void run_pareto(const Context& ctx, const std::string& points, const std::string& out) {
  emit(ctx, out, pareto_csv(pareto_frontier(read_pareto_points(points))));
}

// ----------------------------------------------------------------- objective
struct ObjectiveArgs {
  std::string kind;
  std::string theta_t, theta_tm, theta_hat, index, student_index;
  std::vector<std::string> triples;
  std::string stats, features, grads, out;
  double lambda_var = 1.0;
  bool squared = false;
};

std::string objective_json(const std::string& kind, double loss, std::size_t pairs) {
  return "{\"objective\":\"" + kind + "\",\"loss\":" + io::fmt9(loss) +
         ",\"pairs\":" + std::to_string(pairs) + "}\n";
}

void run_objective(const Context& ctx, const ObjectiveArgs& a) {
  if (a.kind == "tm") {
    if (!a.triples.empty()) {
      require(!a.index.empty(), "--triple needs --index");
      const auto student_index = a.student_index.empty() ? a.index : a.student_index;
      std::vector<ExpertSegment> experts;
      std::vector<ParamVector> students;
      for (const auto& t : a.triples) {
        const auto parts = io::parse_csv("x,y,z\n" + t + "\n", "--triple").rows.at(0);
        experts.push_back({load_indexed_param(a.index, io::parse_int(parts[0], "tag")),
                           load_indexed_param(a.index, io::parse_int(parts[1], "tag"))});
        students.push_back(load_indexed_param(student_index, io::parse_int(parts[2], "tag")));
      }
      emit(ctx, a.out, objective_json("tm", tm_loss_averaged(experts, students), experts.size()));
    } else {
      require(!a.theta_t.empty() && !a.theta_tm.empty() && !a.theta_hat.empty(),
              "tm needs --theta-t, --theta-tm and --theta-hat (or --index with --triple)");
      const double loss = tm_loss(read_param_file(a.theta_t), read_param_file(a.theta_tm),
                                  read_param_file(a.theta_hat));
      emit(ctx, a.out, objective_json("tm", loss, 1));
    }
  } else if (a.kind == "bn") {
    require(!a.stats.empty(), "bn needs --stats");
    const auto stats = read_layer_stats(a.stats);
    emit(ctx, a.out, objective_json("bn", bn_matching_loss(stats, a.lambda_var, a.squared), stats.size()));
  } else if (a.kind == "dm") {
    require(!a.features.empty(), "dm needs --features");
    const auto [real, syn] = read_feature_batches(a.features);
    emit(ctx, a.out, objective_json("dm", dm_loss(real, syn), real.size()));
  } else if (a.kind == "dc") {
    require(!a.grads.empty(), "dc needs --grads");
    const auto [real, syn] = read_grad_vectors(a.grads);
    emit(ctx, a.out, objective_json("dc", dc_loss(real, syn), real.size()));
  }
}

// ----------------------------------------------------------------------- dcs
struct DcsArgs {
  std::string errors, losses, objective = "unknown", out;
  bool adjust_size = false;
};

void run_dcs(const Context& ctx, const DcsArgs& a) {
  const auto entries = ErrorTable(a.errors).read();
  const auto set = join_records(entries, a.losses, a.objective);
  const auto report = dcs(set, a.adjust_size);
  emit(ctx, a.out, dcs_report_json(report, a.objective) + "\n");
}

struct ErrorTableArgs {
  std::string store, subset_id;
  double gen_error = 0.0;
  std::size_t subset_size = 0;
};

void run_error_table(const Context& ctx, const ErrorTableArgs& a) {
  ErrorTable table(a.store);
  table.upsert(a.subset_id, a.gen_error, a.subset_size);
  ctx.out << "{\"subset_id\":" << nlohmann::json(a.subset_id).dump()
          << ",\"gen_error\":" << io::fmt9(a.gen_error) << ",\"subset_size\":" << a.subset_size
          << ",\"records\":" << table.read().size() << "}\n";
}

// --------------------------------------------------------------- fit-scaling
struct FitArgs {
  std::string curve, metric = "error", out;
  std::vector<double> init_b, init_delta;
};

void run_fit(const Context& ctx, const FitArgs& a) {
  auto grid = default_init_grid();
  if (!a.init_b.empty() || !a.init_delta.empty()) {
    require(!a.init_b.empty() && !a.init_delta.empty(), "--init-b and --init-delta go together");
    grid.clear();
    for (double b : a.init_b)
      for (double d : a.init_delta) grid.push_back({b, d});
  }
  const auto curve = read_curve(a.curve, parse_metric_kind(a.metric));
  emit(ctx, a.out, scaling_fit_json(fit_scaling(curve, grid, ctx.jobs)) + "\n");
}

// ------------------------------------------------------------------- distill
struct DistillArgs {
  std::string traj, images, out_dir, scorer = "sharpness", subset, cad_base = "el2n";
  std::size_t factor = 1, ipc = 1, candidates = 16, J = 6, W = 2;
  std::optional<std::size_t> K;
  int resolution = 224;
  double start_quantile = 0.0;
  double scale_min = 0.08, scale_max = 1.0, aspect_min = 3.0 / 4.0, aspect_max = 4.0 / 3.0;
  std::optional<std::uint64_t> seed;
};

void run_distill(const Context& ctx, const DistillArgs& a) {
  require(a.factor >= 1 && a.ipc >= 1 && a.candidates >= 1, "--factor, --ipc, --candidates must be >= 1");
  require(a.resolution >= 1 && a.resolution % int(a.factor) == 0,
          "--resolution must be divisible by --factor");
  require(a.J >= 2 && a.W >= 1, "--J must be >= 2 and --W >= 1");
  DistillOptions opt;
  opt.factor = a.factor;
  opt.resolution = a.resolution;
  opt.ipc = a.ipc;
  opt.num_candidates = a.candidates;
  opt.crop = {a.scale_min, a.scale_max, a.aspect_min, a.aspect_max};
  opt.crop.validate();
  opt.seed = a.seed.value_or(default_seed());
  opt.jobs = ctx.jobs;
  const auto scorer = PatchScorer::parse(a.scorer);
  Ca2dResult result;
  if (!a.subset.empty()) {
    result = distill_subset(read_subset(a.subset), a.images, scorer, opt);
  } else {
    require(!a.traj.empty(), "distill needs --traj (CAD selection) or --subset");
    const auto traj = load_trajectory(a.traj);
    ScoreParams p{1.0, a.J, a.W, a.K.value_or(traj.num_epochs)};
    result = ca2d_pipeline(traj, a.images, p, scorer, opt, a.start_quantile, parse_cad_base(a.cad_base));
  }
  write_distilled_set(result, a.out_dir);
  ctx.log(Level::info, "wrote " + std::to_string(result.set.images.size()) + " images");
}

// -------------------------------------------------------------------- report
void run_report(const Context& ctx, const std::vector<std::string>& inputs, const std::string& out) {
  require(!inputs.empty(), "report needs at least one CSV");
  std::string text = "source,key,variable,value\n";
  for (const auto& path : inputs) {
    const auto t = io::read_csv(path);
    const auto source = fs::path(path).stem().string();
    for (const auto& row : t.rows)
      for (std::size_t c = 1; c < t.header.size(); ++c)
        text += source + "," + row[0] + "," + t.header[c] + "," + row[c] + "\n";
  }
  emit(ctx, out, text);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ddkit: training-dynamics scores, coreset selection, distillation objectives, "
               "DCS correlation, scaling-law fits and patch-stitched distilled sets"};
  app.name(args.empty() ? "ddkit" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();
  unsigned jobs = 1;
  std::string level = "warn";
  app.add_option("--jobs", jobs, "Worker threads for per-sample / per-class loops")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--log-level", level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-traj", "Write a synthetic trajectory store");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--epochs,-E", synth.epochs);
  c_synth->add_option("--samples,-N", synth.samples);
  c_synth->add_option("--classes,-C", synth.classes);
  c_synth->add_option("--seed", synth.seed, "Defaults to $DDKIT_SEED or 0");
  c_synth->add_option("--scenario", synth.scenario)
      ->check(CLI::IsMember({"constant", "late-learner", "random-walk", "sl-clustered"}));
  c_synth->add_option("--images", synth.images, "Also write toy PNG images here");
  c_synth->add_option("--image-size", synth.image_size);

  ValidateArgs val;
  auto* c_val = app.add_subcommand("validate", "Check a trajectory store and/or parameter index");
  c_val->add_option("--traj", val.traj);
  c_val->add_option("--params", val.params, "Parameter-vector index.json");

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Compute per-sample importance scores");
  c_score->add_option("--traj", score.traj)->required();
  c_score->add_option("--method", score.method, "el2n|el2n_sl|forgetting|dyn_unc|cad");
  c_score->add_option("--out", score.out, "CSV path (stdout if omitted)");
  c_score->add_option("--T", score.T, "Softmax temperature");
  c_score->add_option("--J", score.J, "Uncertainty window (epochs)");
  c_score->add_option("--W", score.W, "Trailing windows averaged by CAD");
  c_score->add_option("--K", score.K, "Compute-matched epochs (default E)");
  c_score->add_option("--epoch-start", score.epoch_start);
  c_score->add_option("--epoch-end", score.epoch_end);
  c_score->add_option("--cad-base", score.cad_base, "el2n|target_prob");

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select", "Class-balanced subset selection");
  c_sel->add_option("--traj", sel.traj)->required();
  c_sel->add_option("--method", sel.method, "random|window");
  c_sel->add_option("--scores", sel.scores);
  c_sel->add_option("--ipc", sel.ipc)->required();
  c_sel->add_option("--start-quantile", sel.start_quantile);
  c_sel->add_option("--order", sel.order, "ascending|descending");
  c_sel->add_option("--seed", sel.seed);
  c_sel->add_option("--out", sel.out)->required();

  SlidingArgs slide;
  auto* c_slide = app.add_subcommand("sliding-window", "Enumerate difficulty windows");
  c_slide->add_option("--traj", slide.traj)->required();
  c_slide->add_option("--scores", slide.scores)->required();
  c_slide->add_option("--ipc", slide.ipc)->required();
  c_slide->add_option("--stride", slide.stride, "Default ceil(class size / 20)");
  c_slide->add_option("--out-dir", slide.out_dir)->required();

  std::string pareto_points, pareto_out;
  auto* c_pareto = app.add_subcommand("pareto", "Mark per-IPC best configurations");
  c_pareto->add_option("--points", pareto_points, "CSV ipc,f,accuracy")->required();
  c_pareto->add_option("--out", pareto_out);

  ObjectiveArgs obj;
  auto* c_obj = app.add_subcommand("objective", "Evaluate a distillation objective");
  c_obj->add_option("kind", obj.kind, "tm|bn|dm|dc")->required()->check(CLI::IsMember({"tm", "bn", "dm", "dc"}));
  c_obj->add_option("--theta-t", obj.theta_t);
  c_obj->add_option("--theta-tm", obj.theta_tm);
  c_obj->add_option("--theta-hat", obj.theta_hat);
  c_obj->add_option("--index", obj.index, "Expert parameter index.json");
  c_obj->add_option("--student-index", obj.student_index);
  c_obj->add_option("--triple", obj.triples, "t,t+M,student tag (repeatable)");
  c_obj->add_option("--stats", obj.stats, "Layer statistics JSON");
  c_obj->add_option("--lambda-var", obj.lambda_var);
  c_obj->add_flag("--squared", obj.squared, "Square the BN norms");
  c_obj->add_option("--features", obj.features, "Feature batches JSON");
  c_obj->add_option("--grads", obj.grads, "Gradient vectors JSON");
  c_obj->add_option("--out", obj.out);

  DcsArgs dcs_args;
  auto* c_dcs = app.add_subcommand("dcs", "Distillation correlation score");
  c_dcs->add_option("--errors", dcs_args.errors, "CSV subset_id,gen_error,subset_size")->required();
  c_dcs->add_option("--losses", dcs_args.losses, "CSV subset_id,loss")->required();
  c_dcs->add_option("--objective", dcs_args.objective);
  c_dcs->add_flag("--adjust-size", dcs_args.adjust_size);
  c_dcs->add_option("--out", dcs_args.out);

  ErrorTableArgs et;
  auto* c_et = app.add_subcommand("error-table", "Upsert a generalization error");
  c_et->add_option("--store", et.store)->required();
  c_et->add_option("--subset-id", et.subset_id)->required();
  c_et->add_option("--gen-error", et.gen_error)->required();
  c_et->add_option("--subset-size", et.subset_size)->required();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-scaling", "Fit the data-aware scaling law");
  c_fit->add_option("--curve", fit.curve, "CSV epoch,samples_seen,metric")->required();
  c_fit->add_option("--metric", fit.metric, "error|accuracy");
  c_fit->add_option("--init-b", fit.init_b)->delimiter(',');
  c_fit->add_option("--init-delta", fit.init_delta)->delimiter(',');
  c_fit->add_option("--out", fit.out);

  DistillArgs dist;
  auto* c_dist = app.add_subcommand("distill", "Assemble a patch-stitched distilled set");
  c_dist->add_option("--traj", dist.traj);
  c_dist->add_option("--subset", dist.subset, "Use this coreset instead of CAD selection");
  c_dist->add_option("--images", dist.images)->required();
  c_dist->add_option("--out-dir", dist.out_dir)->required();
  c_dist->add_option("--factor", dist.factor);
  c_dist->add_option("--ipc", dist.ipc);
  c_dist->add_option("--resolution", dist.resolution);
  c_dist->add_option("--scorer", dist.scorer, "sharpness|file:<csv>|cmd:<command>");
  c_dist->add_option("--candidates", dist.candidates);
  c_dist->add_option("--scale-min", dist.scale_min);
  c_dist->add_option("--scale-max", dist.scale_max);
  c_dist->add_option("--aspect-min", dist.aspect_min);
  c_dist->add_option("--aspect-max", dist.aspect_max);
  c_dist->add_option("--K", dist.K);
  c_dist->add_option("--J", dist.J);
  c_dist->add_option("--W", dist.W);
  c_dist->add_option("--start-quantile", dist.start_quantile);
  c_dist->add_option("--cad-base", dist.cad_base);
  c_dist->add_option("--seed", dist.seed);

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* c_report = app.add_subcommand("report", "Merge CSVs into long format");
  c_report->add_option("inputs", report_inputs)->required();
  c_report->add_option("--out", report_out);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ddkit: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  Context ctx{out, err, jobs, Level::warn};
  ctx.level = level == "error" ? Level::error
            : level == "info"  ? Level::info
            : level == "debug" ? Level::debug
                               : Level::warn;
  try {
    if (*c_synth) run_synth(ctx, synth);
    else if (*c_val) run_validate(ctx, val);
    else if (*c_score) run_score(ctx, score);
    else if (*c_sel) run_select(ctx, sel);
    else if (*c_slide) run_sliding(ctx, slide);
    else if (*c_pareto) run_pareto(ctx, pareto_points, pareto_out);
    else if (*c_obj) run_objective(ctx, obj);
    else if (*c_dcs) run_dcs(ctx, dcs_args);
    else if (*c_et) run_error_table(ctx, et);
    else if (*c_fit) run_fit(ctx, fit);
    else if (*c_dist) run_distill(ctx, dist);
    else if (*c_report) run_report(ctx, report_inputs, report_out);
  } catch (const Error& e) {
    err << "ddkit: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "ddkit: io error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "ddkit: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ddkit::cli
