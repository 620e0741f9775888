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

#include "svs/cli.hpp"

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>

#include "svs/dim_select.hpp"
#include "svs/error.hpp"
#include "svs/manifest.hpp"
#include "svs/mask_file.hpp"
#include "svs/pitch_objective.hpp"
#include "svs/rng.hpp"
#include "svs/tensor_file.hpp"
#include "svs/trainer.hpp"
#include "svs/vocab.hpp"

namespace svs {

namespace {

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::string sig9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

VecD column_contour(const std::filesystem::path& p) {
  const Tensor t = read_tensor(p);
  if (t.rank == 1) return t.vec.cast<double>();
  if (t.mat.cols() == 1) return t.mat.col(0).cast<double>();
  fail(Err::ShapeError, p.string() + ": expected a single contour (vector or 1-column)");
}

int cmd_select_dims(const std::string& manifest_path, const std::string& out_path,
                    double threshold, const std::string& report_path, std::ostream& out) {
  const Manifest m = read_manifest(manifest_path);
  const SelectionReport rep = select_from_manifest(m, threshold);
  write_mask(out_path, rep.mask);
  if (!report_path.empty()) write_report_tsv(report_path, rep);
  out << "selected\t" << rep.mask.indices.size() << "\n"
      << "original\t" << rep.mask.original_dim << "\n"
      << "reduction_ratio\t" << sig9(rep.reduction_ratio) << "\n";
  return 0;
}

int cmd_reduce(const std::string& emb_path, const std::string& mask_path,
               const std::string& out_path, std::ostream& out) {
  const Mat emb = read_matrix(emb_path);
  const SelectionMask mask = read_mask(mask_path);
  write_tensor(out_path, apply_mask(emb, mask));
  out << "rows\t" << emb.rows() << "\ncols\t" << mask.indices.size() << "\n";
  return 0;
}

int cmd_pitch_loss(const std::string& gt_path, const std::string& gen_path,
                   std::ostream& out) {
  const VecD gt = column_contour(gt_path);
  const VecD gen = column_contour(gen_path);
  out << fixed9(pitch_loss(gt, gen)) << "\n";
  return 0;
}

// Central-difference sweep over random contour pairs; any coordinate with
// |grad| > 1e-6 must match to 1e-4 relative error.
int cmd_gradcheck_pitch(uint64_t seed, int pairs, std::ostream& out, std::ostream& err) {
  auto rng = stream(seed, "gradcheck");
  std::uniform_int_distribution<int> len_dist(4, 64);
  std::uniform_real_distribution<double> val_dist(0.5, 4.0);
  const double step = 1e-4;
  int checked = 0;
  for (int p = 0; p < pairs; ++p) {
    const int n = len_dist(rng);
    VecD gt(n), gen(n);
    for (int i = 0; i < n; ++i) {
      gt(i) = val_dist(rng);
      gen(i) = val_dist(rng);
    }
    const VecD grad = pitch_loss_grad(gt, gen);
    for (int i = 0; i < n; ++i) {
      VecD hi = gen, lo = gen;
      hi(i) += step;
      lo(i) -= step;
      const double fd = (pitch_loss(gt, hi) - pitch_loss(gt, lo)) / (2 * step);
      if (std::abs(grad(i)) <= 1e-6) continue;
      ++checked;
      const double rel = std::abs(fd - grad(i)) / std::abs(grad(i));
      if (rel >= 1e-4) {
        err << "gradcheck failed: pair " << p << " coord " << i << " analytic "
            << sig9(grad(i)) << " fd " << sig9(fd) << " rel " << sig9(rel) << "\n";
        return exit_class(Err::CheckFailure);
      }
    }
  }
  out << "gradcheck ok: " << pairs << " pairs, " << checked << " coordinates\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& manifest_path,
              const std::string& out_dir, const std::string& resume_dir, int64_t steps,
              int64_t log_every, std::ostream& out) {
  TrainConfig cfg = TrainConfig::parse_file(config_path);
  TrainingSet data = load_training_set(manifest_path);
  Trainer tr(std::move(cfg), std::move(data));
  if (!resume_dir.empty()) tr.load(resume_dir);
  for (int64_t i = 0; i < steps; ++i) {
    const LossBreakdown b = tr.step_once();
    const int64_t done = tr.step_index();
    if (log_every > 0 && (done % log_every == 0 || i + 1 == steps))
      out << "step\t" << done << "\ttotal\t" << sig9(b.total) << "\tmel\t" << sig9(b.l_mel)
          << "\tpitch\t" << sig9(b.l_pitch) << "\n";
  }
  tr.save(out_dir);
  out << "checkpoint\t" << out_dir << "\tstep\t" << tr.step_index() << "\n";
  return 0;
}

int cmd_synth(const std::string& text, const std::string& emb_path, const std::string& speaker,
              const std::string& ckpt_dir, const std::string& out_path, std::ostream& out) {
  namespace fs = std::filesystem;
  TrainConfig cfg = TrainConfig::parse_file(fs::path(ckpt_dir) / "config.cfg");
  Trainer tr(cfg, TrainingSet{});
  tr.load(ckpt_dir);

  int spk_id = -1;
  {
    std::ifstream sp(fs::path(ckpt_dir) / "speakers.tsv");
    std::string line;
    int idx = 0;
    while (std::getline(sp, line)) {
      if (line == speaker) spk_id = idx;
      ++idx;
    }
  }
  if (spk_id < 0) {
    try {
      spk_id = std::stoi(speaker);
    } catch (const std::exception&) {
      fail(Err::IndexOutOfRange, "synth: unknown speaker '" + speaker + "'");
    }
  }

  const Mat emb = read_matrix(emb_path);
  const Mat mel = tr.synth(encode_text(text), emb, spk_id);
  write_tensor(out_path, mel);
  out << "frames\t" << mel.rows() << "\nbins\t" << mel.cols() << "\n";
  return 0;
}

int cmd_params(const std::string& config_path, std::ostream& out) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = TrainConfig::parse_file(config_path);
  if (cfg.emb_dim < 1) cfg.emb_dim = 93;  // typical reduced width
  if (cfg.speaker_count < 1) cfg.speaker_count = 4;
  Trainer tr(cfg, TrainingSet{});
  nn::ParamStore& g = tr.gen_store();
  const int64_t n_ac = g.count_trainable("acoustic");
  const int64_t n_co = g.count_trainable("consumer");
  const int64_t n_pp = g.count_trainable("pitch");
  const int64_t n_sp = g.count_trainable("spk");
  const int64_t n_d = tr.disc_store().count_trainable("");
  out << "acoustic\t" << n_ac << "\nconsumer\t" << n_co << "\npitch\t" << n_pp << "\nspeaker\t"
      << n_sp << "\ngenerator_total\t" << (n_ac + n_co + n_pp + n_sp) << "\ndiscriminator\t"
      << n_d << "\ntotal\t" << (n_ac + n_co + n_pp + n_sp + n_d) << "\n";
  return 0;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".ksm") {
    const SelectionMask m = read_mask(path);
    out << "kind\tmask\noriginal_dim\t" << m.original_dim << "\nselected\t"
        << m.indices.size() << "\n";
    return 0;
  }
  const Tensor t = read_tensor(path);
  const Mat d = t.rank == 1 ? Mat(t.vec) : t.mat;
  out << "kind\ttensor\nrank\t" << t.rank << "\nshape\t";
  if (t.rank == 1)
    out << d.rows();
  else
    out << d.rows() << "x" << d.cols();
  out << "\nmin\t" << sig9(d.minCoeff()) << "\nmax\t" << sig9(d.maxCoeff()) << "\nmean\t"
      << sig9(d.mean()) << "\nstd\t"
      << sig9(std::sqrt((d.array() - d.mean()).square().mean())) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"singing-voice synthesis training toolkit"};
  app.require_subcommand(1);

  std::string manifest_path, out_path, report_path, emb_path, mask_path, gt_path, gen_path;
  std::string config_path, resume_dir, text, speaker, ckpt_dir, file_path;
  double threshold = 1.0;
  uint64_t seed = 1;
  int pairs = 50;
  int64_t steps = 100, log_every = 50;

  CLI::App* sel = app.add_subcommand("select-dims", "pick salient embedding dimensions");
  sel->add_option("--manifest", manifest_path)->required();
  sel->add_option("--out", out_path)->required();
  sel->add_option("--threshold", threshold);
  sel->add_option("--report", report_path);

  CLI::App* red = app.add_subcommand("reduce", "apply a dimension mask to an embedding");
  red->add_option("--emb", emb_path)->required();
  red->add_option("--mask", mask_path)->required();
  red->add_option("--out", out_path)->required();

  CLI::App* pl = app.add_subcommand("pitch-loss", "evaluate the contour-spectrum loss");
  pl->add_option("--gt", gt_path)->required();
  pl->add_option("--gen", gen_path)->required();

  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  std::string gc_what;
  gc->add_option("what", gc_what)->required()->check(CLI::IsMember({"pitch"}));
  gc->add_option("--seed", seed);
  gc->add_option("--pairs", pairs);

  CLI::App* trn = app.add_subcommand("train", "run training steps and write a checkpoint");
  trn->add_option("--config", config_path)->required();
  trn->add_option("--manifest", manifest_path)->required();
  trn->add_option("--out", out_path)->required();
  trn->add_option("--steps", steps);
  trn->add_option("--resume", resume_dir);
  trn->add_option("--log-every", log_every);

  CLI::App* syn = app.add_subcommand("synth", "synthesize a mel from text and an embedding");
  syn->add_option("--text", text)->required();
  syn->add_option("--embedding", emb_path)->required();
  syn->add_option("--speaker", speaker)->required();
  syn->add_option("--checkpoint", ckpt_dir)->required();
  syn->add_option("--out", out_path)->required();

  CLI::App* par = app.add_subcommand("params", "report model parameter counts");
  par->add_option("--config", config_path);

  CLI::App* ins = app.add_subcommand("inspect", "print shape and summary statistics");
  ins->add_option("file", file_path)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << e.what() << "\n" << app.help();
    return exit_class(Err::UnknownCommand);
  }

  try {
    if (sel->parsed())
      return cmd_select_dims(manifest_path, out_path, threshold, report_path, out);
    if (red->parsed()) return cmd_reduce(emb_path, mask_path, out_path, out);
    if (pl->parsed()) return cmd_pitch_loss(gt_path, gen_path, out);
    if (gc->parsed()) return cmd_gradcheck_pitch(seed, pairs, out, err);
    if (trn->parsed())
      return cmd_train(config_path, manifest_path, out_path, resume_dir, steps, log_every, out);
    if (syn->parsed()) return cmd_synth(text, emb_path, speaker, ckpt_dir, out_path, out);
    if (par->parsed()) return cmd_params(config_path, out);
    if (ins->parsed()) return cmd_inspect(file_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_class(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return exit_class(Err::UnknownCommand);
}

}  // namespace svs
