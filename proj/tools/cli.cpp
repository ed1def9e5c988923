#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpseg/distance.hpp"
#include "mpseg/error.hpp"
#include "mpseg/metrics.hpp"
#include "mpseg/multiplanar.hpp"
#include "mpseg/phantom.hpp"
#include "mpseg/pipeline.hpp"
#include "mpseg/postprocess.hpp"
#include "mpseg/preprocess.hpp"
#include "mpseg/segmenter.hpp"
#include "mpseg/volume_io.hpp"

namespace mpseg::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string with_suffix(const fs::path& path, const std::string& suffix) {
  return path.string() + suffix;
}

struct ViewOptions {
  std::string views_file;
  int n = 6;
  double min_angle = 60.0;
  bool canonical = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--views", views_file, "View set JSON written by `mpseg views`");
    cmd->add_option("--n-views", n, "Number of random views")->capture_default_str();
    cmd->add_option("--min-angle", min_angle, "Minimum pairwise view angle (deg)")
        ->capture_default_str();
    cmd->add_flag("--canonical", canonical, "Use the coordinate axes as views");
  }

  ViewSet resolve(std::uint64_t seed) const {
    if (!views_file.empty()) return ViewSet::from_json(read_text(views_file));
    return generate_views(n, seed, min_angle, canonical);
  }
};

struct GridOptions {
  std::int64_t d = 0;
  double m = 0.0;
  std::string fit = "infer";
  std::vector<std::string> fit_images;
  bool diagonal = false;
  std::string center = "volume";

  void add(CLI::App* cmd) {
    cmd->add_option("--d", d, "Pixels per side (0 = fit)")->capture_default_str();
    cmd->add_option("--m", m, "Cube side in mm (0 = fit)")->capture_default_str();
    cmd->add_option("--fit", fit, "Grid fit mode when d/m are not given")
        ->check(CLI::IsMember({"train", "infer"}))
        ->capture_default_str();
    cmd->add_option("--fit-images", fit_images,
                    "Volumes whose geometries are pooled for fitting (default: the input)");
    cmd->add_flag("--diagonal", diagonal, "Fit m to volume diagonals instead of axis extents");
    cmd->add_option("--center", center, "Sampling cube center")
        ->check(CLI::IsMember({"volume", "origin"}))
        ->capture_default_str();
  }

  GridSize resolve(const VolumeGeometry& own) const {
    if (d < 0 || m < 0.0) throw UsageError("--d and --m must be >= 0");
    GridSize size{d, m};
    if (d == 0 || m == 0.0) {
      std::vector<VolumeGeometry> geometries;
      for (const auto& f : fit_images) {
        geometries.push_back(std::visit([](const auto& v) { return v.geometry(); },
                                        read_volume(f)));
      }
      if (geometries.empty()) geometries.push_back(own);
      const GridSize fitted = fit_grid(geometries,
                                       fit == "train" ? GridFitMode::train : GridFitMode::infer,
                                       diagonal);
      if (d == 0) size.pixels = fitted.pixels;
      if (m == 0.0) size.side_mm = fitted.side_mm;
    }
    return size;
  }

  CenterMode center_mode() const {
    return center == "volume" ? CenterMode::volume_center : CenterMode::scanner_origin;
  }
};

std::string describe(const GridSize& g) {
  std::ostringstream out;
  out.precision(17);
  out << "# resolved d = " << g.pixels << "\n# resolved m = " << g.side_mm << "\n";
  return out.str();
}

// Resolved configuration: every effective option value (CLI11 TOML, which
// `--config` reads back) plus derived values as comments.
void write_resolved_config(const CLI::App& app, const std::string& path,
                           const std::string& derived = {}) {
  if (path.empty()) return;
  std::string active;
  for (const CLI::App* sub : app.get_subcommands()) active = sub->get_name() + ".";
  std::istringstream all(app.config_to_str(true, false));
  std::string text, line;
  while (std::getline(all, line)) {
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    const bool other_subcommand = dot != std::string::npos && dot < eq &&
                                  line.compare(0, active.size(), active) != 0;
    if (other_subcommand || line.ends_with("=\"\"") || line.starts_with("resolved-config=")) continue;
    text += line + "\n";
  }
  write_text(path, text + derived);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"mpseg: multiplanar volumetric segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a resolved-config file");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Global RNG seed")->capture_default_str();
  std::string resolved_config;
  app.add_option("--resolved-config", resolved_config,
                 "Where to write the resolved configuration (default: next to the main output)");

  // phantom
  auto* phantom_cmd = app.add_subcommand("phantom", "Generate a synthetic phantom and its labels");
  std::string phantom_spec, phantom_preset, phantom_image, phantom_labels;
  auto* spec_opt = phantom_cmd->add_option("--spec", phantom_spec, "Phantom spec JSON");
  phantom_cmd->add_option("--preset", phantom_preset, "Built-in phantom")
      ->check(CLI::IsMember({"two-sphere", "joint"}))
      ->excludes(spec_opt);
  phantom_cmd->add_option("--image", phantom_image, "Output intensity volume header")->required();
  phantom_cmd->add_option("--labels", phantom_labels, "Output label volume header")->required();

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "Clip negatives and standardize intensities");
  std::string pre_input, pre_output, pre_stats, pre_center = "mean";
  bool pre_no_clip = false;
  pre_cmd->add_option("--input", pre_input)->required();
  pre_cmd->add_option("--output", pre_output)->required();
  pre_cmd->add_option("--stats", pre_stats, "Statistics sidecar (default <output>.stats.json)");
  pre_cmd->add_option("--center", pre_center, "Centering statistic")
      ->check(CLI::IsMember({"mean", "median"}))
      ->capture_default_str();
  pre_cmd->add_flag("--no-clip", pre_no_clip, "Skip clipping negative values");

  // weightmap
  auto* wm_cmd = app.add_subcommand("weightmap", "Distance-based loss weight map from labels");
  std::string wm_labels, wm_output, wm_units = "voxels";
  WeightMapParams wm_params;
  bool wm_eroded = false;
  wm_cmd->add_option("--labels", wm_labels)->required();
  wm_cmd->add_option("--output", wm_output)->required();
  auto* w0_opt = wm_cmd->add_option("--w0", wm_params.w0)->capture_default_str();
  wm_cmd->add_option("--sigma", wm_params.sigma)->capture_default_str();
  wm_cmd->add_option("--wc", wm_params.wc)->capture_default_str();
  auto* erode_opt =
      wm_cmd->add_option("--erode", wm_params.erode_radius_vox, "Erosion ball radius (voxels)")
          ->capture_default_str();
  wm_cmd->add_flag("--eroded-recipe", wm_eroded, "Erode by 3 voxels and use w0 = 20")
      ->excludes(w0_opt)
      ->excludes(erode_opt);
  wm_cmd->add_option("--units", wm_units)
      ->check(CLI::IsMember({"voxels", "mm"}))
      ->capture_default_str();

  // views
  auto* views_cmd = app.add_subcommand("views", "Generate a seeded multiplanar view set");
  int views_n = 6;
  double views_angle = 60.0;
  bool views_canonical = false;
  std::string views_output;
  views_cmd->add_option("--n", views_n)->capture_default_str();
  views_cmd->add_option("--min-angle", views_angle)->capture_default_str();
  views_cmd->add_flag("--canonical", views_canonical);
  views_cmd->add_option("--output", views_output, "Output JSON (default: stdout)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Extract oriented slices for one or all views");
  std::string sample_image, sample_labels, sample_weights, sample_out;
  int sample_view = -1;
  int sample_classes = 0;
  ViewOptions sample_views;
  GridOptions sample_grid;
  sample_cmd->add_option("--image", sample_image)->required();
  sample_cmd->add_option("--labels", sample_labels);
  sample_cmd->add_option("--weights", sample_weights);
  sample_cmd->add_option("--view-index", sample_view, "View to sample (-1 = all)")
      ->capture_default_str();
  sample_cmd->add_option("--classes", sample_classes, "K recorded in manifests without labels");
  sample_cmd->add_option("--out-dir", sample_out)->required();
  sample_views.add(sample_cmd);
  sample_grid.add(sample_cmd);

  // predict
  auto* predict_cmd =
      app.add_subcommand("predict", "Sample, segment, reconstruct and fuse all views");
  std::string pr_image, pr_output, pr_plugin, pr_oracle, pr_work;
  int pr_classes = 0;
  int pr_jobs = 1;
  double pr_timeout = 600.0;
  bool pr_emit = false;
  CorruptionConfig pr_corrupt;
  std::string pr_swap_pairs;
  ViewOptions pr_views;
  GridOptions pr_grid;
  predict_cmd->add_option("--image", pr_image, "Intensity volume header")->required();
  predict_cmd->add_option("--output", pr_output, "Fused label volume header")->required();
  auto* plugin_opt =
      predict_cmd->add_option("--plugin", pr_plugin, "External segmenter command line");
  predict_cmd->add_option("--classes", pr_classes, "K produced by the external plugin");
  predict_cmd->add_option("--oracle", pr_oracle, "Reference labels for the built-in oracle")
      ->excludes(plugin_opt);
  predict_cmd->add_option("--swap-fraction", pr_corrupt.swap_fraction, "Oracle corruption: fraction of boundary-band voxels given the partner label")->capture_default_str();
  predict_cmd->add_option("--swap-pairs", pr_swap_pairs, "Pairs for swaps, a:b[,c:d]");
  predict_cmd->add_option("--band", pr_corrupt.boundary_band_vox, "Oracle corruption: boundary band width for swaps (voxels)")->capture_default_str();
  predict_cmd->add_option("--dilate", pr_corrupt.close_gap_dilate_vox, "Oracle corruption: grow classes into background (voxels)")->capture_default_str();
  predict_cmd->add_option("--floaters", pr_corrupt.floater_count, "Oracle corruption: number of spurious blobs")->capture_default_str();
  predict_cmd->add_option("--floater-radius", pr_corrupt.floater_radius_vox, "Oracle corruption: blob radius (voxels)")
      ->capture_default_str();
  predict_cmd->add_option("--jobs", pr_jobs, "Views processed concurrently")->capture_default_str();
  predict_cmd->add_option("--timeout", pr_timeout, "Plugin timeout per view batch (s)")
      ->capture_default_str();
  predict_cmd->add_option("--work-dir", pr_work, "Scratch directory (default <output>.work)");
  predict_cmd->add_flag("--emit-intermediate", pr_emit,
                        "Keep per-view probability volumes and the view set");
  pr_views.add(predict_cmd);
  pr_grid.add(predict_cmd);

  // postprocess
  auto* post_cmd =
      app.add_subcommand("postprocess", "Symmetric connected-component filtering");
  std::string post_input, post_output, post_pairs, post_stats;
  int post_conn = 26;
  post_cmd->add_option("--input", post_input)->required();
  post_cmd->add_option("--output", post_output)->required();
  post_cmd->add_option("--pairs", post_pairs, "Symmetric class pairs a:b[,c:d]");
  post_cmd->add_option("--connectivity", post_conn)
      ->check(CLI::IsMember({6, 18, 26}))
      ->capture_default_str();
  post_cmd->add_option("--stats", post_stats, "Component log (default <output>.components.json)");

  // collisions
  auto* col_cmd = app.add_subcommand("collisions", "Count inter-class collisions");
  std::string col_input, col_output, col_units = "voxels";
  double col_eps = 2.0;
  std::size_t col_max = 1000;
  col_cmd->add_option("--input", col_input)->required();
  col_cmd->add_option("--epsilon", col_eps)->capture_default_str();
  col_cmd->add_option("--max-points", col_max)->capture_default_str();
  col_cmd->add_option("--units", col_units)
      ->check(CLI::IsMember({"voxels", "mm"}))
      ->capture_default_str();
  col_cmd->add_option("--output", col_output, "Report file (default: stdout)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Dice, GapDice, Hausdorff and collisions");
  std::string ev_pred, ev_truth, ev_output;
  EvaluationConfig ev_config;
  eval_cmd->add_option("--pred", ev_pred)->required();
  eval_cmd->add_option("--truth", ev_truth)->required();
  eval_cmd->add_option("--gap-eps", ev_config.gap_epsilon)->capture_default_str();
  eval_cmd->add_option("--collision-eps", ev_config.collision_epsilon)->capture_default_str();
  eval_cmd->add_option("--output", ev_output, "Report file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (phantom_cmd->parsed()) {
      if (phantom_spec.empty() && phantom_preset.empty()) {
        throw UsageError("phantom needs --spec or --preset");
      }
      PhantomSpec spec = !phantom_spec.empty() ? PhantomSpec::from_json(read_text(phantom_spec))
                         : phantom_preset == "joint" ? joint_phantom_spec()
                                                     : two_sphere_phantom_spec();
      if (app.count("--seed") > 0) spec.seed = seed;
      const Phantom phantom = generate_phantom(spec);
      write_volume(phantom.image, phantom_image);
      write_volume(phantom.labels, phantom_labels);
      write_resolved_config(app, resolved_config.empty() ? with_suffix(phantom_labels, ".run.toml")
                                                         : resolved_config);
      write_text(with_suffix(phantom_labels, ".spec.json"), spec.to_json());
    } else if (pre_cmd->parsed()) {
      const Volume input = read_intensity(pre_input);
      const Volume clipped = pre_no_clip ? input : clip_negatives(input);
      const auto result = standardize(
          clipped, pre_center == "median" ? CenterStatistic::median : CenterStatistic::mean);
      write_volume(result.volume, pre_output);
      write_text(pre_stats.empty() ? with_suffix(pre_output, ".stats.json") : pre_stats,
                 result.stats.to_json());
      write_resolved_config(app, resolved_config.empty() ? with_suffix(pre_output, ".run.toml")
                                                         : resolved_config);
    } else if (wm_cmd->parsed()) {
      WeightMapParams params = wm_params;
      if (wm_eroded) {
        params = WeightMapParams::eroded_recipe();
        params.sigma = wm_params.sigma;
        params.wc = wm_params.wc;
      }
      params.units = wm_units == "mm" ? DistanceUnits::millimetres : DistanceUnits::voxels;
      const WeightMap map = weight_map(read_labels(wm_labels), params);
      write_volume(map.weights, wm_output);
      write_text(with_suffix(wm_output, ".meta.json"), map.metadata_json());
      for (const Label c : map.emptied_classes) {
        std::cerr << "mpseg: warning: class " << int(c) << " eroded to empty\n";
      }
      write_resolved_config(app, resolved_config.empty() ? with_suffix(wm_output, ".run.toml")
                                                         : resolved_config);
    } else if (views_cmd->parsed()) {
      const ViewSet set = generate_views(views_n, seed, views_angle, views_canonical);
      emit(set.to_json(), views_output);
      write_resolved_config(app, !resolved_config.empty() ? resolved_config
                                 : views_output.empty()   ? std::string()
                                                          : with_suffix(views_output, ".run.toml"));
    } else if (sample_cmd->parsed()) {
      const Volume image = read_intensity(sample_image);
      std::optional<LabelVolume> labels;
      std::optional<Volume> weights;
      if (!sample_labels.empty()) labels = read_labels(sample_labels);
      if (!sample_weights.empty()) weights = read_intensity(sample_weights);
      const ViewSet set = sample_views.resolve(seed);
      const GridSize grid = sample_grid.resolve(image.geometry());
      const Vec3 center = sampling_center(image.geometry(), sample_grid.center_mode());
      const int K = labels ? labels->num_classes() : sample_classes;
      if (sample_view >= static_cast<int>(set.views.size())) {
        throw UsageError("--view-index is out of range for the view set");
      }
      fs::create_directories(sample_out);
      for (std::size_t v = 0; v < set.views.size(); ++v) {
        if (sample_view >= 0 && static_cast<int>(v) != sample_view) continue;
        const ViewGrid vg(set.views[v], center, grid.side_mm, grid.pixels);
        const SliceBatch batch = extract_slices(
            {&image, labels ? &*labels : nullptr, weights ? &*weights : nullptr}, vg);
        write_slice_batch(batch, K, fs::path(sample_out) / ("view_" + std::to_string(v)));
      }
      write_text(fs::path(sample_out) / "views.json", set.to_json());
      write_resolved_config(app,
                            resolved_config.empty()
                                ? (fs::path(sample_out) / "run.toml").string()
                                : resolved_config,
                            describe(grid));
    } else if (predict_cmd->parsed()) {
      if (pr_plugin.empty() == pr_oracle.empty()) {
        throw UsageError("predict needs exactly one of --plugin or --oracle");
      }
      const Volume image = read_intensity(pr_image);
      SegmenterHandle handle = ExternalSegmenter{};
      if (!pr_oracle.empty()) {
        CorruptionConfig corruption = pr_corrupt;
        corruption.pairs = SymmetryPairs::parse(pr_swap_pairs);
        corruption.seed = seed;
        const LabelVolume reference = read_labels(pr_oracle);
        if (reference.geometry() != image.geometry()) {
          throw DataError("oracle reference geometry does not match the image");
        }
        handle = corruption.is_identity() ? oracle_perfect(reference)
                                          : oracle_corrupted(reference, corruption);
      } else {
        if (pr_classes < 1) throw UsageError("--plugin requires --classes K (>= 1)");
        handle = ExternalSegmenter{
            pr_plugin, pr_classes,
            std::chrono::milliseconds(static_cast<std::int64_t>(pr_timeout * 1000.0))};
      }
      PredictConfig config;
      config.views = pr_views.resolve(seed);
      config.grid = pr_grid.resolve(image.geometry());
      config.center = pr_grid.center_mode();
      config.jobs = pr_jobs;
      config.work_dir = pr_work.empty() ? fs::path(with_suffix(pr_output, ".work")) : fs::path(pr_work);
      config.keep_view_probabilities = pr_emit;
      fs::create_directories(config.work_dir);

      const PredictResult result = predict(image, handle, config);
      write_volume(result.labels, pr_output);
      if (pr_emit) {
        write_text(config.work_dir / "views.json", config.views.to_json());
        for (std::size_t v = 0; v < result.view_probabilities.size(); ++v) {
          write_volume(result.view_probabilities[v],
                       config.work_dir / ("view_" + std::to_string(v) + "_probs.json"));
        }
      }
      write_resolved_config(app, resolved_config.empty() ? with_suffix(pr_output, ".run.toml")
                                                         : resolved_config,
                            describe(config.grid));
    } else if (post_cmd->parsed()) {
      const LabelVolume input = read_labels(post_input);
      const auto result = symmetric_cc_filter(input, SymmetryPairs::parse(post_pairs),
                                              parse_connectivity(post_conn));
      write_volume(result.labels, post_output);
      write_text(post_stats.empty() ? with_suffix(post_output, ".components.json") : post_stats,
                 result.stats.to_json());
      write_resolved_config(app, resolved_config.empty() ? with_suffix(post_output, ".run.toml")
                                                         : resolved_config);
    } else if (col_cmd->parsed()) {
      const auto report =
          detect_collisions(read_labels(col_input), col_eps, col_max,
                            col_units == "mm" ? DistanceUnits::millimetres : DistanceUnits::voxels);
      emit(report.to_json(), col_output);
      write_resolved_config(app, !resolved_config.empty() ? resolved_config
                                 : col_output.empty()     ? std::string()
                                                          : with_suffix(col_output, ".run.toml"));
    } else if (eval_cmd->parsed()) {
      MetricsReport report = evaluate(read_labels(ev_pred), read_labels(ev_truth), ev_config);
      report.prediction_id = fs::path(ev_pred).filename().string();
      report.truth_id = fs::path(ev_truth).filename().string();
      emit(report.to_text(), ev_output);
      write_resolved_config(app, !resolved_config.empty() ? resolved_config
                                 : ev_output.empty()      ? std::string()
                                                          : with_suffix(ev_output, ".run.toml"));
    }
  } catch (const UsageError& e) {
    std::cerr << "mpseg: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProtocolError& e) {
    std::cerr << "mpseg: plugin error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const DataError& e) {
    std::cerr << "mpseg: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "mpseg: error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace mpseg::cli
