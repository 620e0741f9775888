// Copyright 2026 svslab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "svs/manifest.hpp"
#include "svs/nn/acoustic.hpp"
#include "svs/nn/adam.hpp"
#include "svs/nn/conditioning.hpp"
#include "svs/nn/discriminator.hpp"
#include "svs/nn/pitch_predictor.hpp"

namespace svs {

// Flat key=value file; '#' starts a comment. Unknown keys are rejected.
struct TrainConfig {
  double beta = 0.1;       // weight of the distribution-matching penalty
  double kappa = 10000.0;  // weight of the dependence penalty
  double lambda_g = 100.0; // weight of the generated-path pitch loss
  int batch_size = 16;
  int64_t t_pitch_gen = 100000;   // generated-path pitch losses switch on
  int64_t t_disc_learn = 150000;  // discriminator updates begin
  int64_t t_disc_active = 250000; // adversarial term enters the generator
  double lr = 0.001;
  int64_t gen_halving_period = 100000;
  double disc_gamma = 0.1;
  int64_t disc_step_size = 100000;
  uint64_t seed = 1;
  int64_t scale_factor = 1;  // divides the three thresholds for small runs
  // Model dimensions.
  int mel_bins = 80;
  int enc_dim = 128;
  int dec_hidden = 128;
  int consumer_dim = 64;
  int global_dim = 16;
  int speaker_dim = 32;
  int slice_len = 64;
  bool additive_pos = false;
  bool pitch_dither = true;
  // Data-derived dimensions; filled from the training set and persisted in
  // checkpoints so eval-only sessions can rebuild the model.
  int emb_dim = 0;
  int speaker_count = 0;

  void validate() const;
  std::string serialize() const;
  static TrainConfig parse(const std::string& text);
  static TrainConfig parse_file(const std::filesystem::path& path);
};

struct ScheduleFlags {
  bool pitch_on_generated = false;
  bool disc_learning = false;
  bool disc_active = false;
};

ScheduleFlags schedule(int64_t step, const TrainConfig& cfg);

// Step-decayed learning rates; the discriminator uses its own gamma.
double lr_at(int64_t step, const TrainConfig& cfg, bool discriminator);

struct LossBreakdown {
  double l_mel = 0;
  double l_mmd = 0;
  double l_mi = 0;
  double l_pitch = 0;
  double l_pitch_g = 0;
  double l_pitch_repr = 0;
  double l_d = 0;
  double total = 0;
};

// Applies the schedule gates and composes the weighted total. Gated-off parts
// are forced to exactly 0. Throws NonFiniteLoss if an active part is not
// finite, with every part value in the message.
LossBreakdown total_loss(const LossBreakdown& parts, const ScheduleFlags& flags,
                         const TrainConfig& cfg);

// Test hook: drops individual objective terms from the training step.
struct TermMask {
  bool mel = true;
  bool mmd = true;
  bool mi = true;
  bool pitch = true;
  bool pitch_g = true;
  bool pitch_repr = true;
  bool d = true;
};

struct Utterance {
  std::vector<int> ids;  // encoded text
  Mat mel;               // M x mel_bins
  Vec pitch;             // M, Hz, 0 = unvoiced
  Mat emb;               // frames x R, reduced embedding
  int speaker = 0;
};

struct TrainingSet {
  std::vector<Utterance> utts;
  std::vector<std::string> speaker_names;  // index = speaker id
  int emb_dim = 0;
};

// Loads and validates every utterance referenced by a manifest.
TrainingSet load_training_set(const std::filesystem::path& manifest_path);

class Trainer {
 public:
  Trainer(TrainConfig cfg, TrainingSet data);

  LossBreakdown step_once();
  int64_t step_index() const { return step_; }

  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

  // Eval-mode synthesis: mel frames follow the embedding's frame count.
  Mat synth(const std::vector<int>& ids, const Mat& emb, int speaker) const;

  TermMask& term_mask() { return mask_; }
  const TrainConfig& config() const { return cfg_; }
  const TrainingSet& data() const { return data_; }
  nn::ParamStore& gen_store() { return gen_ps_; }
  nn::ParamStore& disc_store() { return disc_ps_; }
  const nn::PitchPredictor& pitch_predictor() const { return pp_; }
  const nn::Discriminator& discriminator() const { return disc_; }
  const nn::Acoustic& acoustic() const { return acoustic_; }
  const nn::Consumer& consumer() const { return consumer_; }

 private:
  TrainConfig cfg_;
  TrainingSet data_;
  nn::ParamStore gen_ps_;
  nn::ParamStore disc_ps_;
  nn::Embedding spk_emb_;
  nn::Consumer consumer_;
  nn::Acoustic acoustic_;
  nn::PitchPredictor pp_;
  nn::Discriminator disc_;
  nn::Adam adam_g_;
  nn::Adam adam_d_;
  TermMask mask_;
  int64_t step_ = 0;
};

}  // namespace svs
