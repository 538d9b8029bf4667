#pragma once

#include <string>

#include "mdepth/augment.hpp"
#include "mdepth/manifest.hpp"
#include "mdepth/model.hpp"

namespace mdepth {

struct TrainConfig {
  int batch_size = 32;
  double momentum = 0.9;
  double learning_rate = 1.0;  // global knob; per-layer multipliers live in the spec
  double si_weight = 0.5;
  int64_t phase1_samples = 48000;  // global stack
  int64_t phase2_samples = 32000;  // local stack, global held fixed; 0 skips it
  int checkpoint_every = 500;      // steps between latest.ckpt refreshes
  uint64_t seed = 7;
  int workers = 1;

  void validate() const;
};

struct TrainResult {
  TwoScaleModel model;
  std::string phase1_checkpoint;  // global stack trained, local at init
  std::string phase2_checkpoint;  // both stacks trained
  std::string loss_curve;         // csv: step,phase,loss
  int64_t dropped_samples = 0;    // targets with no valid pixels at ingestion
};

// Phase 1 trains the global stack against the ground-truth targets; phase 2
// freezes it (eval mode, no gradient, no updates) and trains the local stack
// on its fixed outputs. Batches, augmentation draws and dropout are all
// derived from the seed, with per-sample augmentation streams independent of
// the worker count, so a rerun reproduces every artifact byte for byte.
// A non-finite loss aborts with NumericError naming the offending step.
TrainResult train_two_stage(const NetworkSpec& spec, const Manifest& train_manifest,
                            const AugmentParams& augment_params,
                            const TrainConfig& config, const std::string& out_dir);

}  // namespace mdepth
