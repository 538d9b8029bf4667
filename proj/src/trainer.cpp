#include "mdepth/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mdepth/checkpoint.hpp"
#include "mdepth/data_prep.hpp"
#include "mdepth/loss.hpp"
#include "mdepth/optimizer.hpp"

namespace mdepth {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kAugmentStream = 0x61756700;   // per-sample augmentation
constexpr uint64_t kDropoutStream = 0x64726f00;   // per-step dropout masks
constexpr uint64_t kScheduleStream = 0x73636800;  // epoch shuffles

struct BatchTargets {
  std::vector<DepthMap> maps;
  std::vector<const DepthMap*> ptrs;
};

// Deterministic epoch-shuffled index stream.
class SampleSchedule {
 public:
  SampleSchedule(size_t n, uint64_t seed) : n_(n), rng_(seed) { refill(); }

  size_t next() {
    if (cursor_ == order_.size()) refill();
    return order_[cursor_++];
  }

 private:
  void refill() {
    order_.resize(n_);
    for (size_t i = 0; i < n_; ++i) order_[i] = i;
    for (size_t i = n_; i > 1; --i)
      std::swap(order_[i - 1],
                order_[static_cast<size_t>(rng_.uniform_int(0, static_cast<int>(i) - 1))]);
    cursor_ = 0;
  }
  size_t n_;
  Rng rng_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
};

void quantize_params(const std::vector<TensorPtr>& params) {
  for (const auto& p : params) quantize_to_f32(*p);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("train: batch size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0)
    throw UsageError("train: momentum must be in [0,1)");
  if (!(learning_rate > 0.0)) throw UsageError("train: learning rate must be positive");
  if (si_weight < 0.0 || si_weight > 1.0)
    throw UsageError("train: si_weight must be in [0,1]");
  if (phase1_samples < 1 || phase2_samples < 0)
    throw UsageError("train: phase sample counts must be positive");
  if (workers < 1) throw UsageError("train: workers must be >= 1");
}

TrainResult train_two_stage(const NetworkSpec& spec, const Manifest& train_manifest,
                            const AugmentParams& augment_params,
                            const TrainConfig& config, const std::string& out_dir) {
  config.validate();
  AugmentParams aug = augment_params;
  aug.crop_height = spec.input_height;
  aug.crop_width = spec.input_width;
  aug.validate();
  if (train_manifest.entries.empty()) throw DataError("train: empty training manifest");
  fs::create_directories(out_dir);

  // ingest once: extremes-masked targets, samples without valid pixels dropped
  TrainResult result;
  std::vector<Sample> samples;
  samples.reserve(train_manifest.entries.size());
  for (size_t i = 0; i < train_manifest.entries.size(); ++i) {
    Sample s = load_sample(train_manifest, i);
    try {
      s.depth = mask_extremes(s.depth);
    } catch (const DataError&) {
      ++result.dropped_samples;
      continue;
    }
    if (s.depth.n_valid() == 0) {
      ++result.dropped_samples;
      continue;
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("train: every training target was empty");
  if (result.dropped_samples > 0)
    std::cerr << "train: dropped " << result.dropped_samples
              << " samples without usable targets\n";

  TwoScaleModel model;
  {
    Rng init_rng(derive_seed(config.seed, 0xbeef));
    model = build_networks(spec, &init_rng);
  }

  result.loss_curve = (fs::path(out_dir) / "loss_curve.csv").string();
  std::ofstream curve(result.loss_curve);
  if (!curve) throw DataError("cannot write " + result.loss_curve);
  curve << "step,phase,loss\n";

  const int h = spec.output_height, w = spec.output_width;
  const size_t in_plane = 3ull * spec.input_height * spec.input_width;

  auto assemble_batch = [&](int phase, int64_t step, SampleSchedule& schedule,
                            TensorPtr* input, BatchTargets* targets) {
    const int b = config.batch_size;
    std::vector<size_t> picks(static_cast<size_t>(b));
    for (int s = 0; s < b; ++s) picks[static_cast<size_t>(s)] = schedule.next();
    *input = make_tensor({b, 3, spec.input_height, spec.input_width});
    targets->maps.assign(static_cast<size_t>(b), DepthMap());
    parallel_for(b, config.workers, [&](int64_t slot) {
      const uint64_t aug_seed =
          derive_seed(config.seed, kAugmentStream + static_cast<uint64_t>(phase),
                      (static_cast<uint64_t>(step) << 8) | static_cast<uint64_t>(slot));
      Rng rng(aug_seed);
      const Sample a = augment(samples[picks[static_cast<size_t>(slot)]], aug, rng);
      const std::vector<double> plane = input_from_rgb(a.rgb, train_manifest.rgb_mean);
      std::copy(plane.begin(), plane.end(),
                (*input)->data.begin() + static_cast<int64_t>(slot) * static_cast<int64_t>(in_plane));
      targets->maps[static_cast<size_t>(slot)] = resample_nearest(a.depth, h, w);
    });
    targets->ptrs.clear();
    for (const auto& m : targets->maps) targets->ptrs.push_back(&m);
  };

  auto run_phase = [&](int phase, int64_t n_samples, Stack& trained) {
    const int64_t steps = (n_samples + config.batch_size - 1) / config.batch_size;
    SampleSchedule schedule(samples.size(),
                            derive_seed(config.seed, kScheduleStream + static_cast<uint64_t>(phase)));
    SgdMomentum opt(config.learning_rate, config.momentum);
    const auto params = trained.params();
    const auto mults = trained.param_lr_multipliers();
    for (size_t i = 0; i < params.size(); ++i) opt.add_param(params[i], mults[i]);

    for (int64_t step = 0; step < steps; ++step) {
      TensorPtr input;
      BatchTargets targets;
      assemble_batch(phase, step, schedule, &input, &targets);
      Rng dropout_rng(derive_seed(config.seed, kDropoutStream + static_cast<uint64_t>(phase),
                                  static_cast<uint64_t>(step)));
      double loss = 0.0;
      try {
        TensorPtr pred;
        if (phase == 1) {
          pred = coarse_forward(model, input, true, &dropout_rng);
        } else {
          TensorPtr coarse_map;
          {
            NoGradGuard no_grad;  // the global stack stays fixed
            coarse_map = coarse_forward(model, input, false);
          }
          pred = fine_forward(model, input, coarse_map, true, &dropout_rng);
        }
        for (const auto& p : params) p->zero_grad();
        loss = training_loss_batch(pred, targets.ptrs, config.si_weight);
        backward(pred);
        opt.step();
        quantize_params(params);
      } catch (const NumericError& e) {
        throw NumericError("phase " + std::to_string(phase) + " diverged at step " +
                           std::to_string(step) + ": " + e.what());
      }
      char row[96];
      std::snprintf(row, sizeof(row), "%lld,%d,%.9g\n", static_cast<long long>(step),
                    phase, loss);
      curve << row;
      if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0)
        save_checkpoint((fs::path(out_dir) / "latest.ckpt").string(), model);
    }
  };

  run_phase(1, config.phase1_samples, model.coarse);
  result.phase1_checkpoint = (fs::path(out_dir) / "phase1.ckpt").string();
  save_checkpoint(result.phase1_checkpoint, model);

  if (config.phase2_samples > 0) {
    run_phase(2, config.phase2_samples, model.fine);
  }
  result.phase2_checkpoint = (fs::path(out_dir) / "phase2.ckpt").string();
  save_checkpoint(result.phase2_checkpoint, model);

  curve.close();
  if (!curve) throw DataError("short write to " + result.loss_curve);
  result.model = std::move(model);
  return result;
}

}  // namespace mdepth
