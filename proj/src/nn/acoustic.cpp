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

#include "svs/nn/acoustic.hpp"

#include "svs/error.hpp"

namespace svs::nn {

Acoustic::Acoustic(ParamStore& ps, const std::string& name, const AcousticConfig& cfg)
    : cfg_(cfg),
      emb_(ps, name + "/emb", cfg.vocab, cfg.enc_dim),
      enc_rnn_(ps, name + "/enc_rnn", cfg.enc_dim, cfg.enc_dim / 2),
      adapter_(ps, name + "/adapter", cfg.consumer_dim,
               cfg.enc_dim + cfg.speaker_dim + cfg.global_dim),
      dec_rnn_(ps, name + "/dec_rnn", cfg.dec_hidden, cfg.dec_hidden),
      dec_out_(ps, name + "/dec_out", cfg.dec_hidden, cfg.mel_bins) {
  if (cfg.vocab < 1) fail(Err::ConfigError, "acoustic: vocab must be set");
  if (cfg.enc_dim % 2 != 0) fail(Err::OddFeatureDim, "acoustic: enc_dim must be even");
  const int fused = cfg.enc_dim + cfg.speaker_dim + cfg.global_dim;
  if (fused % 2 != 0) fail(Err::OddFeatureDim, "acoustic: fused width must be even");
  for (int i = 0; i < 3; ++i)
    enc_blocks_.emplace_back(ps, name + "/enc_blk" + std::to_string(i + 1), cfg.enc_dim,
                             cfg.enc_dim, 5, true);
  dec_blocks_.emplace_back(ps, name + "/dec_blk1", fused, cfg.dec_hidden, 5, true);
  dec_blocks_.emplace_back(ps, name + "/dec_blk2", cfg.dec_hidden, cfg.dec_hidden, 5, true);
  for (int i = 0; i < 5; ++i)
    postnet_.emplace_back(ps, name + "/post" + std::to_string(i + 1), cfg.mel_bins, cfg.mel_bins,
                          5, PadMode::kReplicate);
}

Node* Acoustic::encode(Tape& t, const std::vector<int>& ids) const {
  if (ids.empty()) fail(Err::ShapeError, "acoustic: empty symbol sequence");
  Node* x = emb_(t, ids);
  for (const ConvBlock& blk : enc_blocks_) x = blk(t, x);
  return enc_rnn_(t, x);
}

Node* Acoustic::pos_apply(Tape& t, Node* x) const {
  return cfg_.additive_pos ? sinusoidal_add(t, x) : rope(t, x);
}

GeneratorOutput Acoustic::generate(Tape& t, const std::vector<int>& ids, Node* cond_local,
                                   Node* global_emb, Node* spk, int mel_len) const {
  if (mel_len < 1) fail(Err::ShapeError, "acoustic: mel_len must be >= 1");
  if (spk->value.rows() != 1 || spk->value.cols() != cfg_.speaker_dim)
    fail(Err::ShapeError, "acoustic: speaker embedding shape");
  if (global_emb->value.rows() != 1 || global_emb->value.cols() != cfg_.global_dim)
    fail(Err::ShapeError, "acoustic: global embedding shape");
  if (cond_local != nullptr && cond_local->value.rows() != mel_len)
    fail(Err::ShapeError, "acoustic: conditioning length " +
                              std::to_string(cond_local->value.rows()) + " vs mel_len " +
                              std::to_string(mel_len));

  Node* enc = encode(t, ids);
  const int T = static_cast<int>(enc->value.rows());
  Node* fused = concat_cols(t, concat_cols(t, enc, repeat_row(t, spk, T)),
                            repeat_row(t, global_emb, T));
  Node* stream = expand_nn(t, pos_apply(t, fused), mel_len);
  if (cond_local != nullptr)
    stream = add(t, stream, adapter_(t, pos_apply(t, cond_local)));

  Node* h = stream;
  for (const ConvBlock& blk : dec_blocks_) h = blk(t, h);
  Node* dec = dec_out_(t, dec_rnn_(t, h));

  Node* r = dec;
  for (size_t i = 0; i < postnet_.size(); ++i) {
    r = postnet_[i](t, r);
    if (i + 1 < postnet_.size()) r = tanh_op(t, r);
  }
  return {dec, add(t, dec, r), enc};
}

}  // namespace svs::nn
