// mdepth: pipeline entry point. Subcommands cover dataset generation,
// two-stage training, prediction, evaluation, method comparison, augmentation
// previews, numerical self-verification and weight-template dumps.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mdepth/baseline.hpp"
#include "mdepth/checkpoint.hpp"
#include "mdepth/config.hpp"
#include "mdepth/eval.hpp"
#include "mdepth/gradcheck.hpp"
#include "mdepth/loss.hpp"
#include "mdepth/synthetic.hpp"
#include "mdepth/trainer.hpp"

namespace fs = std::filesystem;
using namespace mdepth;

namespace {

constexpr const char* kVersion = "mdepth 1.0.0";

// MDEPTH_OUT_ROOT prefixes relative --out paths when set.
std::string resolve_out(const std::string& out) {
  const char* root = std::getenv("MDEPTH_OUT_ROOT");
  if (!root || out.empty() || fs::path(out).is_absolute()) return out;
  return (fs::path(root) / out).string();
}

void write_run_record(const std::string& out_dir, const std::string& command,
                      const std::string& effective_config, uint64_t seed, int workers) {
  fs::create_directories(out_dir);
  std::ofstream run(fs::path(out_dir) / "run.txt");
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(effective_config)));
  run << "command = " << command << "\n"
      << "version = " << kVersion << "\n"
      << "seed = " << seed << "\n"
      << "workers = " << workers << "\n"
      << "config_hash = " << hash << "\n";
}

Config load_config_or_default(const std::string& path) {
  return path.empty() ? Config::parse_text("") : Config::parse_file(path);
}

double gradcheck_stack(const NetworkSpec& spec, uint64_t seed) {
  Rng rng(seed);
  TwoScaleModel model = build_networks(spec, &rng);
  auto input = make_tensor({1, 3, spec.input_height, spec.input_width});
  for (auto& v : input->data) v = rng.uniform(0.05, 0.95);
  const int units = spec.output_height * spec.output_width;
  auto readout = make_tensor({1, units});
  for (auto& v : readout->data) v = rng.uniform(-1.0, 1.0);

  auto build = [&]() {
    auto pred = coarse_forward(model, input, false);
    return fully_connected(reshape(pred, {1, units}), readout, make_tensor({1}));
  };
  const auto params = model.coarse.params();
  return gradcheck(build, params);
}

double loss_gradient_error() {
  Rng rng(4242);
  double worst = 0.0;
  for (double w : {0.0, 0.5, 1.0}) {
    DepthMap gt(6, 8);
    for (size_t i = 0; i < gt.depth.size(); ++i)
      if (!rng.bernoulli(0.25)) gt.set(static_cast<int>(i / 8), static_cast<int>(i % 8), rng.uniform(0.5, 9.0));
    std::vector<double> pred_log(gt.depth.size());
    for (auto& v : pred_log) v = rng.uniform(-0.5, 2.2);
    const TrainingLoss l = training_loss(pred_log, gt, w);
    const double eps = 1e-4;  // the loss is quadratic: no truncation term
    for (size_t i = 0; i < pred_log.size(); ++i) {
      if (!gt.mask[i]) {
        if (l.grad[i] != 0.0) throw NumericError("masked pixel received gradient");
        continue;
      }
      auto p = pred_log;
      p[i] += eps;
      const double fp = training_loss(p, gt, w).value;
      p[i] -= 2 * eps;
      const double fm = training_loss(p, gt, w).value;
      const double numeric = (fp - fm) / (2 * eps);
      const double denom = std::max({std::fabs(numeric), std::fabs(l.grad[i]), 1e-12});
      worst = std::max(worst, std::fabs(numeric - l.grad[i]) / denom);
    }
  }
  return worst;
}

double three_form_residual() {
  Rng rng(515151);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int h = rng.uniform_int(1, 16), w = rng.uniform_int(1, 16);
    DepthMap gt(h, w), pred(h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        pred.set(r, c, rng.uniform(0.5, 10.0));
        if (!rng.bernoulli(0.2)) gt.set(r, c, rng.uniform(0.5, 10.0));
      }
    if (gt.n_valid() == 0) gt.set(0, 0, 1.0);
    const double linear_time = si_error(pred, gt);
    const double pairwise = si_error_pairwise(pred, gt);
    // explicit-shift form
    const double alpha = optimal_log_scale(pred, gt);
    double acc = 0.0;
    int64_t n = 0;
    for (size_t i = 0; i < gt.depth.size(); ++i) {
      if (!gt.mask[i] || !pred.mask[i]) continue;
      const double d = std::log(pred.depth[i]) - std::log(gt.depth[i]) + alpha;
      acc += d * d;
      ++n;
    }
    const double explicit_shift = acc / static_cast<double>(n);
    worst = std::max({worst, std::fabs(linear_time - pairwise),
                      std::fabs(linear_time - explicit_shift)});
  }
  return worst;
}

int run_selfcheck() {
  // primitives: exact-linear ops at 1e-7, kinked composites at 1e-4
  Rng rng(808);
  double linear_err = 0.0;
  {
    auto x = make_tensor({1, 6}, true);
    auto w = make_tensor({4, 6}, true);
    auto b = make_tensor({4}, true);
    auto ro = make_tensor({1, 4});
    for (auto* t : {&x, &w, &b, &ro})
      for (auto& v : (*t)->data) v = rng.uniform(-1.0, 1.0);
    std::vector<TensorPtr> params{x, w, b};
    linear_err = gradcheck(
        [&] { return fully_connected(fully_connected(x, w, b), ro, make_tensor({1})); },
        params);
  }
  {
    auto x = make_tensor({1, 2, 6, 6}, true);
    auto w = make_tensor({2, 2, 3, 3}, true);
    auto b = make_tensor({2}, true);
    auto ro = make_tensor({1, 18});
    for (auto* t : {&x, &w, &b, &ro})
      for (auto& v : (*t)->data) v = rng.uniform(-1.0, 1.0);
    std::vector<TensorPtr> params{x, w, b};
    linear_err = std::max(
        linear_err,
        gradcheck(
            [&] {
              auto y = conv2d(x, w, b, 2, 1);
              return fully_connected(reshape(y, {1, 18}), ro, make_tensor({1}));
            },
            params));
  }
  const double stack_err = gradcheck_stack(NetworkSpec::tiny_scale(), 2026);
  const double loss_err = loss_gradient_error();
  const double residual = three_form_residual();

  std::printf("linear primitive gradients : max rel err %.3e (limit 1e-7)\n", linear_err);
  std::printf("full stack gradients       : max rel err %.3e (limit 1e-4)\n", stack_err);
  std::printf("training loss gradients    : max rel err %.3e (limit 1e-6)\n", loss_err);
  std::printf("three-form equivalence     : max residual %.3e (limit 1e-10)\n", residual);
  if (linear_err >= 1e-7 || stack_err >= 1e-4 || loss_err >= 1e-6 || residual >= 1e-10)
    throw NumericError("selfcheck failed");
  std::printf("selfcheck passed\n");
  return 0;
}

EvalProtocol protocol_for(const NetworkSpec& spec, int workers) {
  EvalProtocol proto;
  proto.input_height = spec.input_height;
  proto.input_width = spec.input_width;
  proto.output_height = spec.output_height;
  proto.output_width = spec.output_width;
  proto.workers = workers;
  return proto;
}

void dump_weight_templates(const TwoScaleModel& model, int count,
                           const std::string& out_dir) {
  const RuntimeLayer& out_layer = model.coarse.layers.back();
  if (out_layer.spec.kind != LayerKind::LinearOutput || !out_layer.weights)
    throw DataError("dump-weights: checkpoint lacks a linear output layer");
  const int grid = out_layer.weights->dim(0);  // h*w
  const int hidden = out_layer.weights->dim(1);
  const int h = model.spec.output_height, w = model.spec.output_width;
  if (grid != h * w) throw DataError("dump-weights: unexpected output layout");

  // one spatial template per hidden unit, ranked by l2 norm
  std::vector<std::pair<double, int>> ranked;
  for (int j = 0; j < hidden; ++j) {
    double norm = 0.0;
    for (int p = 0; p < grid; ++p) {
      const double v = out_layer.weights->data[static_cast<size_t>(p) * hidden + j];
      norm += v * v;
    }
    ranked.emplace_back(-std::sqrt(norm), j);
  }
  std::sort(ranked.begin(), ranked.end());

  fs::create_directories(out_dir);
  const int n = std::min(count, hidden);
  for (int rank = 0; rank < n; ++rank) {
    const int j = ranked[static_cast<size_t>(rank)].second;
    double peak = 0.0;
    for (int p = 0; p < grid; ++p)
      peak = std::max(peak, std::fabs(out_layer.weights->data[static_cast<size_t>(p) * hidden + j]));
    std::vector<uint8_t> gray(static_cast<size_t>(grid));
    for (int p = 0; p < grid; ++p) {
      const double v = out_layer.weights->data[static_cast<size_t>(p) * hidden + j];
      const double unit = peak > 0.0 ? v / peak : 0.0;  // zero maps to mid-gray
      gray[static_cast<size_t>(p)] =
          static_cast<uint8_t>(std::lround(127.5 + 127.0 * unit));
    }
    char name[64];
    std::snprintf(name, sizeof(name), "template_%03d.pgm", rank);
    write_pgm8((fs::path(out_dir) / name).string(), h, w, gray);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-scale depth regression toolkit"};
  app.require_subcommand(1);

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "render a synthetic box-world dataset");
  std::string gen_out;
  DatasetOptions gen_opt;
  uint64_t gen_seed = 7;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--scenes", gen_opt.scenes, "number of scenes");
  gen->add_option("--frames", gen_opt.frames_per_scene, "frames per scene");
  gen->add_option("--width", gen_opt.frame_width, "frame width");
  gen->add_option("--height", gen_opt.frame_height, "frame height");
  gen->add_option("--train-frac", gen_opt.train_fraction, "fraction of scenes for training");
  gen->add_option("--seed", gen_seed, "generator seed");

  // ---- train ----
  auto* train = app.add_subcommand("train", "two-stage training on a manifest");
  std::string train_config, train_data, train_out;
  int64_t train_seed = -1;
  int train_workers = 1;
  train->add_option("--config", train_config, "config file");
  train->add_option("--data", train_data, "training manifest")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--seed", train_seed, "override config seed");
  train->add_option("--workers", train_workers, "batch assembly workers");

  // ---- predict ----
  auto* predict = app.add_subcommand("predict", "write depth predictions for a manifest");
  std::string pr_ckpt, pr_data, pr_out, pr_stage = "fine";
  int pr_workers = 1;
  predict->add_option("--checkpoint", pr_ckpt, "model checkpoint")->required();
  predict->add_option("--data", pr_data, "manifest")->required();
  predict->add_option("--out", pr_out, "output directory")->required();
  predict->add_option("--stage", pr_stage, "coarse|fine")
      ->check(CLI::IsMember({"coarse", "fine"}));
  predict->add_option("--workers", pr_workers, "parallel images");

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "metric suite for one method");
  std::string ev_ckpt, ev_data, ev_out, ev_stage = "fine", ev_mean_from;
  int ev_workers = 1;
  eval_cmd->add_option("--checkpoint", ev_ckpt, "model checkpoint");
  eval_cmd->add_option("--mean-from", ev_mean_from,
                       "evaluate the training-set mean-depth baseline instead");
  eval_cmd->add_option("--data", ev_data, "test manifest")->required();
  eval_cmd->add_option("--out", ev_out, "output directory")->required();
  eval_cmd->add_option("--stage", ev_stage, "coarse|fine")
      ->check(CLI::IsMember({"coarse", "fine"}));
  eval_cmd->add_option("--workers", ev_workers, "parallel images");

  // ---- compare ----
  auto* cmp = app.add_subcommand("compare", "mean baseline vs coarse vs refined");
  std::string cmp_ckpt, cmp_data, cmp_train, cmp_out;
  int cmp_workers = 1, cmp_dump = 0;
  cmp->add_option("--checkpoint", cmp_ckpt, "model checkpoint")->required();
  cmp->add_option("--data", cmp_data, "test manifest")->required();
  cmp->add_option("--train-data", cmp_train, "training manifest (for the mean baseline)")
      ->required();
  cmp->add_option("--out", cmp_out, "output directory")->required();
  cmp->add_option("--workers", cmp_workers, "parallel images");
  cmp->add_option("--dump", cmp_dump, "write N best-to-worst prediction quadruples");

  // ---- augment-preview ----
  auto* prev = app.add_subcommand("augment-preview", "write augmented variants of a sample");
  std::string pv_data, pv_out, pv_config;
  int pv_index = 0, pv_count = 8;
  uint64_t pv_seed = 7;
  prev->add_option("--data", pv_data, "manifest")->required();
  prev->add_option("--out", pv_out, "output directory")->required();
  prev->add_option("--index", pv_index, "sample index");
  prev->add_option("--count", pv_count, "number of variants");
  prev->add_option("--seed", pv_seed, "draw seed");
  prev->add_option("--config", pv_config, "config file (augment section)");

  // ---- selfcheck ----
  auto* self = app.add_subcommand("selfcheck",
                                  "gradient checks and loss-form equivalence");

  // ---- dump-weights ----
  auto* dw = app.add_subcommand("dump-weights", "output-layer templates as images");
  std::string dw_ckpt, dw_out;
  int dw_count = 64;
  dw->add_option("--checkpoint", dw_ckpt, "model checkpoint")->required();
  dw->add_option("--out", dw_out, "output directory")->required();
  dw->add_option("--count", dw_count, "templates to write");

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      const std::string out = resolve_out(gen_out);
      char eff[256];
      std::snprintf(eff, sizeof(eff), "gen-data scenes=%d frames=%d %dx%d frac=%.9g seed=%llu",
                    gen_opt.scenes, gen_opt.frames_per_scene, gen_opt.frame_width,
                    gen_opt.frame_height, gen_opt.train_fraction,
                    static_cast<unsigned long long>(gen_seed));
      write_run_record(out, "gen-data", eff, gen_seed, 1);
      const GeneratedDataset ds = generate_synthetic_dataset(out, gen_opt, gen_seed);
      std::cout << "wrote " << ds.train_manifest << " and " << ds.test_manifest << "\n";
      return 0;
    }

    if (train->parsed()) {
      Config cfg = load_config_or_default(train_config);
      if (train_seed >= 0) cfg.set("train", "seed", std::to_string(train_seed));
      const NetworkSpec spec = spec_from_config(cfg);
      TrainConfig tc = train_config_from_config(cfg);
      tc.workers = train_workers;
      const AugmentParams aug = augment_params_from_config(cfg);
      const std::string out = resolve_out(train_out);
      write_run_record(out, "train", cfg.canonical_text(), tc.seed, tc.workers);
      const Manifest manifest = load_manifest(train_data);
      validate_manifest(manifest);
      const TrainResult result = train_two_stage(spec, manifest, aug, tc, out);
      std::cout << "checkpoints: " << result.phase1_checkpoint << ", "
                << result.phase2_checkpoint << "\n";
      return 0;
    }

    if (predict->parsed()) {
      const TwoScaleModel model = load_checkpoint(pr_ckpt);
      const Manifest manifest = load_manifest(pr_data);
      validate_manifest(manifest);
      const std::string out = resolve_out(pr_out);
      write_run_record(out, "predict", pr_ckpt + " stage=" + pr_stage, 0, pr_workers);
      const EvalProtocol proto = protocol_for(model.spec, pr_workers);
      const Predictor p =
          model_predictor(model, manifest.rgb_mean, pr_stage == "fine", pr_stage);
      std::vector<DepthMap> preds(manifest.entries.size());
      parallel_for(static_cast<int64_t>(manifest.entries.size()), pr_workers,
                   [&](int64_t i) {
                     const Sample frame = load_sample(manifest, static_cast<size_t>(i));
                     const Sample view =
                         test_transform(frame, proto.input_height, proto.input_width);
                     preds[static_cast<size_t>(i)] = p.predict(frame, view.rgb);
                   });
      int clamped = 0;
      for (size_t i = 0; i < preds.size(); ++i)
        clamped += save_depth(
            (fs::path(out) / (manifest.entries[i].id + "_pred.pgm")).string(), preds[i]);
      if (clamped > 0)
        std::cerr << "predict: warning: " << clamped
                  << " pixels clamped to the 65.535 m file ceiling\n";
      std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      if (ev_ckpt.empty() == ev_mean_from.empty())
        throw UsageError("evaluate: pass exactly one of --checkpoint / --mean-from");
      const Manifest manifest = load_manifest(ev_data);
      validate_manifest(manifest);
      const std::string out = resolve_out(ev_out);

      Predictor predictor;
      EvalProtocol proto;
      TwoScaleModel model;
      if (!ev_ckpt.empty()) {
        model = load_checkpoint(ev_ckpt);
        proto = protocol_for(model.spec, ev_workers);
        predictor = model_predictor(model, manifest.rgb_mean, ev_stage == "fine", ev_stage);
        write_run_record(out, "evaluate", ev_ckpt + " stage=" + ev_stage, 0, ev_workers);
      } else {
        const NetworkSpec spec = spec_from_config(Config::parse_text(""));
        proto = protocol_for(spec, ev_workers);
        const Manifest train_manifest = load_manifest(ev_mean_from);
        validate_manifest(train_manifest);
        predictor = constant_map_predictor(
            mean_depth_baseline(train_manifest, proto.input_height, proto.input_width,
                                proto.output_height, proto.output_width),
            "mean");
        write_run_record(out, "evaluate", "mean-from " + ev_mean_from, 0, ev_workers);
      }
      const DatasetEval eval = evaluate_dataset(predictor, manifest, proto);
      write_metrics_csv((fs::path(out) / "metrics.csv").string(), eval.report);
      write_per_image_csv((fs::path(out) / "per_image.csv").string(), eval.rows);
      write_diagnostics_csv((fs::path(out) / "diagnostics.csv").string(),
                            {predictor.name}, {eval});
      std::cout << MetricsReport::csv_header() << "\n" << eval.report.csv_row() << "\n";
      return 0;
    }

    if (cmp->parsed()) {
      const TwoScaleModel model = load_checkpoint(cmp_ckpt);
      const Manifest test_manifest = load_manifest(cmp_data);
      const Manifest train_manifest = load_manifest(cmp_train);
      validate_manifest(test_manifest);
      validate_manifest(train_manifest);
      const std::string out = resolve_out(cmp_out);
      write_run_record(out, "compare", cmp_ckpt, 0, cmp_workers);
      const EvalProtocol proto = protocol_for(model.spec, cmp_workers);

      std::vector<Predictor> methods;
      methods.push_back(constant_map_predictor(
          mean_depth_baseline(train_manifest, proto.input_height, proto.input_width,
                              proto.output_height, proto.output_width),
          "mean"));
      methods.push_back(model_predictor(model, test_manifest.rgb_mean, false, "coarse"));
      methods.push_back(model_predictor(model, test_manifest.rgb_mean, true, "fine"));
      const std::vector<DatasetEval> evals = compare_methods(methods, test_manifest, proto);

      std::vector<std::string> names;
      for (const auto& m : methods) names.push_back(m.name);
      write_comparison_csv((fs::path(out) / "comparison.csv").string(), names, evals);
      write_diagnostics_csv((fs::path(out) / "diagnostics.csv").string(), names, evals);
      for (size_t i = 0; i < evals.size(); ++i)
        write_per_image_csv((fs::path(out) / (names[i] + "_per_image.csv")).string(),
                            evals[i].rows);
      if (cmp_dump > 0)
        dump_prediction_gallery(model, test_manifest.rgb_mean, test_manifest, proto,
                                cmp_dump, (fs::path(out) / "gallery").string());
      std::cout << "method," << MetricsReport::csv_header() << "\n";
      for (size_t i = 0; i < evals.size(); ++i)
        std::cout << names[i] << "," << evals[i].report.csv_row() << "\n";
      return 0;
    }

    if (prev->parsed()) {
      const Manifest manifest = load_manifest(pv_data);
      const Config cfg = load_config_or_default(pv_config);
      AugmentParams aug = augment_params_from_config(cfg);
      const NetworkSpec spec = spec_from_config(cfg);
      aug.crop_height = spec.input_height;
      aug.crop_width = spec.input_width;
      const std::string out = resolve_out(pv_out);
      write_run_record(out, "augment-preview", cfg.canonical_text(), pv_seed, 1);
      const Sample sample = load_sample(manifest, static_cast<size_t>(pv_index));
      for (int i = 0; i < pv_count; ++i) {
        Rng rng(derive_seed(pv_seed, static_cast<uint64_t>(i)));
        const Sample a = augment(sample, aug, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "variant_%02d", i);
        write_ppm((fs::path(out) / (std::string(name) + "_rgb.ppm")).string(), a.rgb);
        save_depth((fs::path(out) / (std::string(name) + "_depth.pgm")).string(), a.depth);
      }
      std::cout << "wrote " << pv_count << " variants to " << out << "\n";
      return 0;
    }

    if (self->parsed()) return run_selfcheck();

    if (dw->parsed()) {
      const TwoScaleModel model = load_checkpoint(dw_ckpt);
      const std::string out = resolve_out(dw_out);
      write_run_record(out, "dump-weights", dw_ckpt, 0, 1);
      dump_weight_templates(model, dw_count, out);
      std::cout << "wrote templates to " << out << "\n";
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
