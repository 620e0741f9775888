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

#include "svs/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "svs/error.hpp"
#include "svs/pitch_objective.hpp"
#include "svs/rng.hpp"
#include "svs/tensor_file.hpp"
#include "svs/vocab.hpp"

namespace svs {

namespace fs = std::filesystem;
using nn::Node;
using nn::Tape;

// -------------------------------------------------------------- TrainConfig

void TrainConfig::validate() const {
  if (!(t_pitch_gen < t_disc_learn && t_disc_learn < t_disc_active))
    fail(Err::ConfigError, "config: thresholds must be strictly increasing");
  if (scale_factor < 1) fail(Err::ConfigError, "config: scale_factor must be >= 1");
  for (int64_t t : {t_pitch_gen, t_disc_learn, t_disc_active})
    if (t % scale_factor != 0)
      fail(Err::ConfigError, "config: scale_factor must divide every threshold");
  if (batch_size < 1) fail(Err::ConfigError, "config: batch_size must be >= 1");
  if (lr <= 0) fail(Err::ConfigError, "config: lr must be positive");
  if (gen_halving_period < 1 || disc_step_size < 1)
    fail(Err::ConfigError, "config: scheduler periods must be >= 1");
  if (slice_len < 16 || slice_len % 16 != 0)
    fail(Err::ConfigError, "config: slice_len must be a positive multiple of 16");
  if (enc_dim < 2 || enc_dim % 2 != 0) fail(Err::ConfigError, "config: enc_dim must be even");
  if ((enc_dim + speaker_dim + global_dim) % 2 != 0)
    fail(Err::ConfigError, "config: fused width must be even");
  if (mel_bins < 1 || dec_hidden < 1 || consumer_dim < 1 || global_dim < 1 || speaker_dim < 1)
    fail(Err::ConfigError, "config: model widths must be positive");
}

std::string TrainConfig::serialize() const {
  std::ostringstream os;
  os << "beta=" << beta << "\nkappa=" << kappa << "\nlambda=" << lambda_g
     << "\nbatch_size=" << batch_size << "\nt_pitch_gen=" << t_pitch_gen
     << "\nt_disc_learn=" << t_disc_learn << "\nt_disc_active=" << t_disc_active
     << "\nlr=" << lr << "\ngen_halving_period=" << gen_halving_period
     << "\ndisc_gamma=" << disc_gamma << "\ndisc_step_size=" << disc_step_size
     << "\nseed=" << seed << "\nscale_factor=" << scale_factor << "\nmel_bins=" << mel_bins
     << "\nenc_dim=" << enc_dim << "\ndec_hidden=" << dec_hidden
     << "\nconsumer_dim=" << consumer_dim << "\nglobal_dim=" << global_dim
     << "\nspeaker_dim=" << speaker_dim << "\nslice_len=" << slice_len
     << "\nadditive_pos=" << (additive_pos ? 1 : 0)
     << "\npitch_dither=" << (pitch_dither ? 1 : 0) << "\nemb_dim=" << emb_dim
     << "\nspeaker_count=" << speaker_count << "\n";
  return os.str();
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail(Err::ConfigError, "config: bad boolean for " + key + ": " + v);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Err::ConfigError, "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "beta") c.beta = std::stod(val);
      else if (key == "kappa") c.kappa = std::stod(val);
      else if (key == "lambda") c.lambda_g = std::stod(val);
      else if (key == "batch_size") c.batch_size = std::stoi(val);
      else if (key == "t_pitch_gen") c.t_pitch_gen = std::stoll(val);
      else if (key == "t_disc_learn") c.t_disc_learn = std::stoll(val);
      else if (key == "t_disc_active") c.t_disc_active = std::stoll(val);
      else if (key == "lr") c.lr = std::stod(val);
      else if (key == "gen_halving_period") c.gen_halving_period = std::stoll(val);
      else if (key == "disc_gamma") c.disc_gamma = std::stod(val);
      else if (key == "disc_step_size") c.disc_step_size = std::stoll(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "scale_factor") c.scale_factor = std::stoll(val);
      else if (key == "mel_bins") c.mel_bins = std::stoi(val);
      else if (key == "enc_dim") c.enc_dim = std::stoi(val);
      else if (key == "dec_hidden") c.dec_hidden = std::stoi(val);
      else if (key == "consumer_dim") c.consumer_dim = std::stoi(val);
      else if (key == "global_dim") c.global_dim = std::stoi(val);
      else if (key == "speaker_dim") c.speaker_dim = std::stoi(val);
      else if (key == "slice_len") c.slice_len = std::stoi(val);
      else if (key == "additive_pos") c.additive_pos = parse_bool(val, key);
      else if (key == "pitch_dither") c.pitch_dither = parse_bool(val, key);
      else if (key == "emb_dim") c.emb_dim = std::stoi(val);
      else if (key == "speaker_count") c.speaker_count = std::stoi(val);
      else fail(Err::ConfigError, "config: unknown key '" + key + "'");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(Err::ConfigError, "config: bad value for " + key + ": " + val);
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoFailure, "cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

// ------------------------------------------------------- schedule & compose

ScheduleFlags schedule(int64_t step, const TrainConfig& cfg) {
  if (step < 0) fail(Err::ConfigError, "schedule: negative step");
  ScheduleFlags f;
  f.pitch_on_generated = step >= cfg.t_pitch_gen / cfg.scale_factor;
  f.disc_learning = step >= cfg.t_disc_learn / cfg.scale_factor;
  f.disc_active = step >= cfg.t_disc_active / cfg.scale_factor;
  return f;
}

double lr_at(int64_t step, const TrainConfig& cfg, bool discriminator) {
  if (step < 0) fail(Err::ConfigError, "lr_at: negative step");
  if (discriminator)
    return cfg.lr * std::pow(cfg.disc_gamma, static_cast<double>(step / cfg.disc_step_size));
  return cfg.lr * std::pow(0.5, static_cast<double>(step / cfg.gen_halving_period));
}

LossBreakdown total_loss(const LossBreakdown& parts, const ScheduleFlags& flags,
                         const TrainConfig& cfg) {
  LossBreakdown out = parts;
  if (!flags.pitch_on_generated) {
    out.l_pitch_g = 0;
    out.l_pitch_repr = 0;
  }
  if (!flags.disc_active) out.l_d = 0;
  const double vals[] = {out.l_mel,     out.l_mmd,        out.l_mi, out.l_pitch,
                         out.l_pitch_g, out.l_pitch_repr, out.l_d};
  for (double v : vals)
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite loss term: mel=" << out.l_mel << " mmd=" << out.l_mmd
         << " mi=" << out.l_mi << " pitch=" << out.l_pitch << " pitch_g=" << out.l_pitch_g
         << " pitch_repr=" << out.l_pitch_repr << " d=" << out.l_d;
      fail(Err::NonFiniteLoss, os.str());
    }
  out.total = out.l_mel + cfg.beta * out.l_mmd + cfg.kappa * out.l_mi + out.l_pitch +
              cfg.lambda_g * out.l_pitch_g + out.l_pitch_repr - out.l_d;
  return out;
}

// ------------------------------------------------------------ data loading

TrainingSet load_training_set(const fs::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  validate_training_entries(m);
  if (m.entries.empty()) fail(Err::ManifestError, "manifest has no utterances");
  TrainingSet out;
  for (const UttEntry& e : m.entries) {
    Utterance u;
    u.ids = encode_text(e.text);
    u.mel = read_matrix(m.resolve(e.mel_path));
    u.pitch = read_vector(m.resolve(e.pitch_path));
    u.emb = read_matrix(m.resolve(e.embedding_path));
    const int dim = static_cast<int>(u.emb.cols());
    if (out.emb_dim == 0) out.emb_dim = dim;
    if (dim != out.emb_dim)
      fail(Err::DimMismatch, "embedding width varies across utterances: " +
                                 std::to_string(dim) + " vs " + std::to_string(out.emb_dim));
    int id = -1;
    for (size_t i = 0; i < out.speaker_names.size(); ++i)
      if (out.speaker_names[i] == e.speaker_id) id = static_cast<int>(i);
    if (id < 0) {
      id = static_cast<int>(out.speaker_names.size());
      out.speaker_names.push_back(e.speaker_id);
    }
    u.speaker = id;
    out.utts.push_back(std::move(u));
  }
  return out;
}

// ----------------------------------------------------------------- Trainer

namespace {

TrainConfig resolve_dims(TrainConfig cfg, const TrainingSet& data) {
  cfg.validate();
  if (data.emb_dim > 0) cfg.emb_dim = data.emb_dim;
  if (!data.speaker_names.empty())
    cfg.speaker_count = static_cast<int>(data.speaker_names.size());
  if (cfg.emb_dim < 1) fail(Err::ConfigError, "trainer: embedding dim unknown");
  if (cfg.speaker_count < 1) cfg.speaker_count = 1;
  return cfg;
}

Node* acc_add(Tape& t, Node* acc, Node* term) {
  return acc == nullptr ? term : nn::add(t, acc, term);
}

std::string mangle(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (c == '/') c = '~';
  return out;
}

void save_store(const nn::ParamStore& ps, const fs::path& params_dir,
                const fs::path& moments_dir) {
  fs::create_directories(params_dir);
  fs::create_directories(moments_dir);
  for (const nn::Param* p : ps.all()) {
    write_tensor(params_dir / (mangle(p->name) + ".kse"), p->value);
    if (p->m.size() > 0) {
      write_tensor(moments_dir / (mangle(p->name) + ".m.kse"), p->m);
      write_tensor(moments_dir / (mangle(p->name) + ".v.kse"), p->v);
    }
  }
}

void load_store(nn::ParamStore& ps, const fs::path& params_dir, const fs::path& moments_dir) {
  for (nn::Param* p : ps.all()) {
    const Mat saved = read_matrix(params_dir / (mangle(p->name) + ".kse"));
    if (saved.rows() != p->value.rows() || saved.cols() != p->value.cols())
      fail(Err::ShapeError, "checkpoint: shape mismatch for " + p->name);
    p->value = saved;
    const fs::path mp = moments_dir / (mangle(p->name) + ".m.kse");
    const fs::path vp = moments_dir / (mangle(p->name) + ".v.kse");
    if (fs::exists(mp) && fs::exists(vp)) {
      p->m = read_matrix(mp);
      p->v = read_matrix(vp);
      if (p->m.rows() != p->value.rows() || p->m.cols() != p->value.cols())
        fail(Err::ShapeError, "checkpoint: moment shape mismatch for " + p->name);
    } else {
      p->m.resize(0, 0);
      p->v.resize(0, 0);
    }
  }
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, TrainingSet data)
    : cfg_(resolve_dims(std::move(cfg), data)),
      data_(std::move(data)),
      gen_ps_(cfg_.seed),
      disc_ps_(cfg_.seed),
      spk_emb_(gen_ps_, "spk", cfg_.speaker_count, cfg_.speaker_dim),
      consumer_(gen_ps_, "consumer",
                nn::ConsumerConfig{cfg_.emb_dim, cfg_.consumer_dim, cfg_.global_dim,
                                   cfg_.speaker_dim}),
      acoustic_(gen_ps_, "acoustic",
                nn::AcousticConfig{vocab_size(), cfg_.enc_dim, cfg_.speaker_dim,
                                   cfg_.global_dim, cfg_.consumer_dim, cfg_.dec_hidden,
                                   cfg_.mel_bins, cfg_.additive_pos}),
      pp_(gen_ps_, "pitch", cfg_.mel_bins),
      disc_(disc_ps_, "disc",
            nn::DiscConfig{cfg_.mel_bins, cfg_.slice_len}) {
  for (const Utterance& u : data_.utts) {
    if (u.speaker < 0 || u.speaker >= cfg_.speaker_count)
      fail(Err::IndexOutOfRange, "trainer: speaker id out of range");
    if (static_cast<int>(u.mel.cols()) != cfg_.mel_bins)
      fail(Err::DimMismatch, "trainer: mel width mismatch");
    if (u.pitch.size() != u.mel.rows()) fail(Err::LengthMismatch, "trainer: pitch length");
  }
}

LossBreakdown Trainer::step_once() {
  if (data_.utts.empty()) fail(Err::EmptyBatch, "trainer: no data");
  const ScheduleFlags flags = schedule(step_, cfg_);
  const int B = cfg_.batch_size;
  const int64_t N = static_cast<int64_t>(data_.utts.size());
  const int L = cfg_.slice_len;

  auto rng_dither = stream(cfg_.seed, "dither", static_cast<uint64_t>(step_));
  auto rng_prior = stream(cfg_.seed, "prior", static_cast<uint64_t>(step_));
  auto rng_gadv = stream(cfg_.seed, "aug_g", static_cast<uint64_t>(step_));
  auto rng_disc = stream(cfg_.seed, "aug_d", static_cast<uint64_t>(step_));
  auto rng_slice = stream(cfg_.seed, "slice", static_cast<uint64_t>(step_));

  const bool want_adv = flags.disc_active && mask_.d;
  const bool want_disc = flags.disc_learning && mask_.d;
  const bool want_pg = flags.pitch_on_generated && mask_.pitch_g;
  const bool want_repr = flags.pitch_on_generated && mask_.pitch_repr;
  const bool want_gt_pred = mask_.pitch || want_repr;
  const bool want_mmd = mask_.mmd && cfg_.beta != 0.0 && B >= 2;
  const bool want_mi = mask_.mi && cfg_.kappa != 0.0 && B >= 3;

  Tape t;
  Node *sum_mel = nullptr, *sum_pitch = nullptr, *sum_pg = nullptr, *sum_repr = nullptr;
  std::vector<Node*> globals;
  std::vector<Node*> fake_nodes;
  std::vector<Mat> real_mats, fake_mats;
  MatD encD = MatD::Zero(B, cfg_.enc_dim);

  for (int i = 0; i < B; ++i) {
    const Utterance& u = data_.utts[static_cast<size_t>((step_ * B + i) % N)];
    const int M = static_cast<int>(u.mel.rows());
    Node* spk = spk_emb_(t, {u.speaker});
    nn::ConsumerOut co = consumer_(t, t.leaf(u.emb), spk, M);
    nn::GeneratorOutput gen =
        acoustic_.generate(t, u.ids, co.local, co.global_emb, spk, M);
    globals.push_back(co.global_emb);
    encD.row(i) = gen.encoded->value.colwise().mean().cast<double>();

    if (mask_.mel) {
      Node* lm = nn::add(t, nn::add(t, nn::l1_to(t, gen.decoder, u.mel),
                                    nn::l2_to(t, gen.decoder, u.mel)),
                         nn::add(t, nn::l1_to(t, gen.postnet, u.mel),
                                 nn::l2_to(t, gen.postnet, u.mel)));
      sum_mel = acc_add(t, sum_mel, lm);
    }

    VecD gt_pitch;
    if (mask_.pitch || want_pg) {
      const Vec norm = normalize_pitch(u.pitch, cfg_.pitch_dither ? &rng_dither : nullptr);
      gt_pitch = norm.cast<double>();
    }
    nn::PitchPrediction gt_pred{nullptr, nullptr};
    if (want_gt_pred) gt_pred = pp_.predict(t, t.leaf(u.mel));
    if (mask_.pitch)
      sum_pitch = acc_add(t, sum_pitch, nn::pitch_loss_op(t, gt_pitch, gt_pred.f0));
    if (want_pg || want_repr) {
      nn::PitchPrediction gen_pred = pp_.predict(t, gen.decoder);
      if (want_pg)
        sum_pg = acc_add(t, sum_pg, nn::pitch_loss_op(t, gt_pitch, gen_pred.f0));
      if (want_repr)  // ground-truth side enters as a constant
        sum_repr = acc_add(t, sum_repr,
                           nn::repr_loss_op(t, gt_pred.repr->value.cast<double>(),
                                            gen_pred.repr));
    }

    if (want_adv || want_disc) {
      if (M < L)
        fail(Err::BadSliceLength, "trainer: utterance of " + std::to_string(M) +
                                      " frames is shorter than slice_len " +
                                      std::to_string(L));
      const int off = nn::Discriminator::slice_offset(M, L, rng_slice);
      Node* fslice = nn::slice_rows(t, gen.postnet, off, L);
      if (want_adv) fake_nodes.push_back(fslice);
      if (want_disc) {
        fake_mats.push_back(fslice->value);
        const int roff = nn::Discriminator::slice_offset(M, L, rng_slice);
        real_mats.push_back(Mat(u.mel.middleRows(roff, L)));
      }
    }
  }

  const double nb = static_cast<double>(B);
  Node* n_mel = sum_mel ? nn::scale(t, sum_mel, 1.0 / nb) : nullptr;
  Node* n_pitch = sum_pitch ? nn::scale(t, sum_pitch, 1.0 / nb) : nullptr;
  Node* n_pg = sum_pg ? nn::scale(t, sum_pg, 1.0 / nb) : nullptr;
  Node* n_repr = sum_repr ? nn::scale(t, sum_repr, 1.0 / nb) : nullptr;
  Node* n_mmd = nullptr;
  Node* n_mi = nullptr;
  if (want_mmd || want_mi) {
    Node* gstack = nn::stack_rows(t, std::span<Node* const>(globals.data(), globals.size()));
    if (want_mmd)
      n_mmd = nn::mmd_op(t, gstack, nn::sample_prior(B, cfg_.global_dim, rng_prior));
    if (want_mi) n_mi = nn::mi_op(t, gstack, encD);
  }
  Node* n_gadv = want_adv ? disc_.g_adversarial(t, fake_nodes, &rng_gadv) : nullptr;

  LossBreakdown parts;
  parts.l_mel = n_mel ? n_mel->value(0, 0) : 0.0;
  parts.l_mmd = n_mmd ? n_mmd->value(0, 0) : 0.0;
  parts.l_mi = n_mi ? n_mi->value(0, 0) : 0.0;
  parts.l_pitch = n_pitch ? n_pitch->value(0, 0) : 0.0;
  parts.l_pitch_g = n_pg ? n_pg->value(0, 0) : 0.0;
  parts.l_pitch_repr = n_repr ? n_repr->value(0, 0) : 0.0;
  parts.l_d = n_gadv ? -static_cast<double>(n_gadv->value(0, 0)) : 0.0;
  const LossBreakdown out = total_loss(parts, flags, cfg_);  // throws on non-finite

  Node* objective = nullptr;
  auto add_term = [&](Node* n, double w) {
    if (n == nullptr || w == 0.0) return;
    Node* scaled = w == 1.0 ? n : nn::scale(t, n, w);
    objective = objective == nullptr ? scaled : nn::add(t, objective, scaled);
  };
  add_term(n_mel, 1.0);
  add_term(n_mmd, cfg_.beta);
  add_term(n_mi, cfg_.kappa);
  add_term(n_pitch, 1.0);
  add_term(n_pg, cfg_.lambda_g);
  add_term(n_repr, 1.0);
  add_term(n_gadv, 1.0);  // already -mean(score)

  if (objective != nullptr) {
    t.backward(objective);
    adam_g_.step(gen_ps_.all(), t, lr_at(step_, cfg_, false));
  }

  if (want_disc) {
    Tape td;
    Node* dl = disc_.d_objective(td, real_mats, fake_mats, &rng_disc);
    if (!std::isfinite(static_cast<double>(dl->value(0, 0))))
      fail(Err::NonFiniteLoss, "discriminator objective is not finite");
    td.backward(dl);
    adam_d_.step(disc_ps_.all(), td, lr_at(step_, cfg_, true));
  }

  ++step_;
  return out;
}

Mat Trainer::synth(const std::vector<int>& ids, const Mat& emb, int speaker) const {
  if (speaker < 0 || speaker >= cfg_.speaker_count)
    fail(Err::IndexOutOfRange, "synth: speaker id out of range");
  if (static_cast<int>(emb.cols()) != cfg_.emb_dim)
    fail(Err::DimMismatch, "synth: embedding width " + std::to_string(emb.cols()) +
                               ", trained with " + std::to_string(cfg_.emb_dim));
  Tape t;
  const int M = static_cast<int>(emb.rows());
  Node* spk = spk_emb_(t, {speaker});
  nn::ConsumerOut co = consumer_(t, t.leaf(emb), spk, M);
  nn::GeneratorOutput gen = acoustic_.generate(t, ids, co.local, co.global_emb, spk, M);
  return gen.postnet->value;
}

void Trainer::save(const fs::path& dir) const {
  fs::create_directories(dir);
  save_store(gen_ps_, dir / "params_g", dir / "opt_g");
  save_store(disc_ps_, dir / "params_d", dir / "opt_d");
  {
    std::ofstream meta(dir / "meta.tsv");
    if (!meta) fail(Err::IoFailure, "cannot write checkpoint meta");
    meta << "step\t" << step_ << "\nadam_g_t\t" << adam_g_.t << "\nadam_d_t\t" << adam_d_.t
         << "\nseed\t" << cfg_.seed << "\n";
  }
  {
    std::ofstream cf(dir / "config.cfg");
    if (!cf) fail(Err::IoFailure, "cannot write checkpoint config");
    cf << cfg_.serialize();
  }
  {
    std::ofstream sp(dir / "speakers.tsv");
    for (const std::string& name : data_.speaker_names) sp << name << "\n";
  }
}

void Trainer::load(const fs::path& dir) {
  std::ifstream meta(dir / "meta.tsv");
  if (!meta) fail(Err::IoFailure, "cannot open checkpoint meta in " + dir.string());
  std::string key;
  int64_t step = 0, gt = 0, dt = 0;
  uint64_t seed = 0;
  while (meta >> key) {
    if (key == "step") meta >> step;
    else if (key == "adam_g_t") meta >> gt;
    else if (key == "adam_d_t") meta >> dt;
    else if (key == "seed") meta >> seed;
    else fail(Err::ManifestError, "checkpoint meta: unknown key " + key);
  }
  if (seed != cfg_.seed)
    fail(Err::ConfigError, "checkpoint seed does not match the configured seed");
  load_store(gen_ps_, dir / "params_g", dir / "opt_g");
  load_store(disc_ps_, dir / "params_d", dir / "opt_d");
  step_ = step;
  adam_g_.t = gt;
  adam_d_.t = dt;
}

}  // namespace svs
