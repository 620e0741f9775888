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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "svs/error.hpp"
#include "svs/nn/acoustic.hpp"
#include "svs/vocab.hpp"
#include "test_util.hpp"

using namespace svs;
using namespace svs::nn;

TEST_CASE("symbol inventory covers letters digits and punctuation") {
  CHECK(vocab_size() == 44);
  CHECK(symbol_id('a') == 2);
  CHECK(symbol_id('z') == 27);
  CHECK(symbol_id('A') == 2);  // case folds
  CHECK(symbol_id('0') == 28);
  CHECK(symbol_id('9') == 37);
  CHECK(symbol_id('.') == 38);
  CHECK(symbol_id('-') == 43);
  CHECK(symbol_id(' ') == kBoundaryId);
  CHECK_THROWS_AS(symbol_id('@'), Error);
  CHECK_THROWS_AS(symbol_id('#'), Error);
}

TEST_CASE("text encoding wraps in silence and collapses whitespace") {
  CHECK(encode_text("ab") == std::vector<int>{0, 2, 3, 0});
  CHECK(encode_text("a  b") == std::vector<int>{0, 2, 1, 3, 0});
  CHECK(encode_text("  a\t b ") == std::vector<int>{0, 2, 1, 3, 0});
  CHECK(encode_text("") == std::vector<int>{0, 0});
  CHECK(encode_text("   ") == std::vector<int>{0, 0});
  CHECK(encode_text("A.b") == std::vector<int>{0, 2, 38, 3, 0});
  CHECK_THROWS_AS(encode_text("a@b"), Error);
}

namespace {

AcousticConfig small_cfg() {
  AcousticConfig cfg;
  cfg.vocab = vocab_size();
  return cfg;
}

}  // namespace

TEST_CASE("encoder preserves sequence length") {
  ParamStore ps(21);
  Acoustic a(ps, "a", small_cfg());
  for (int len : {1, 5, 80}) {
    std::vector<int> ids(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) ids[static_cast<size_t>(i)] = (i * 7) % vocab_size();
    Tape t;
    Node* enc = a.encode(t, ids);
    CHECK(enc->value.rows() == len);
    CHECK(enc->value.cols() == 128);
    CHECK(enc->value.allFinite());
  }
  Tape t;
  CHECK_THROWS_AS(a.encode(t, {}), Error);
}

TEST_CASE("encoder output depends on every symbol") {
  ParamStore ps(22);
  Acoustic a(ps, "a", small_cfg());
  std::vector<int> ids = encode_text("test line");
  Tape t1;
  const Mat base = a.encode(t1, ids)->value;
  Tape t2;
  CHECK(a.encode(t2, ids)->value == base);  // repeatable

  for (size_t pos : {size_t{1}, ids.size() - 2}) {
    std::vector<int> mutated = ids;
    mutated[pos] = mutated[pos] == 5 ? 6 : 5;
    Tape t;
    CHECK((a.encode(t, mutated)->value - base).cwiseAbs().maxCoeff() > 1e-4f);
  }
}

TEST_CASE("generator produces mel frames at the requested length") {
  ParamStore ps(23);
  Acoustic a(ps, "a", small_cfg());
  const std::vector<int> ids = encode_text("shape check");
  const Mat spk = test::random_mat(1, 32, 30);
  const Mat glob = test::random_mat(1, 16, 31);

  for (int mel_len : {16, 93, 400}) {
    Tape t;
    Node* local = t.leaf(test::random_mat(mel_len, 64, 32));
    GeneratorOutput out = a.generate(t, ids, local, t.leaf(glob), t.leaf(spk), mel_len);
    CHECK(out.decoder->value.rows() == mel_len);
    CHECK(out.decoder->value.cols() == 80);
    CHECK(out.postnet->value.rows() == mel_len);
    CHECK(out.postnet->value.cols() == 80);
    CHECK(out.encoded->value.rows() == static_cast<int>(ids.size()));
    CHECK(out.encoded->value.cols() == 128);
    CHECK(out.decoder->value.allFinite());
    CHECK(out.postnet->value.allFinite());
  }
}

TEST_CASE("generator runs without local conditioning") {
  ParamStore ps(24);
  Acoustic a(ps, "a", small_cfg());
  const std::vector<int> ids = encode_text("no conditioning");
  Tape t;
  GeneratorOutput out = a.generate(t, ids, nullptr, t.leaf(test::random_mat(1, 16, 33)),
                                   t.leaf(test::random_mat(1, 32, 34)), 20);
  CHECK(out.postnet->value.rows() == 20);
  CHECK(out.postnet->value.allFinite());

  // Supplying conditioning changes the output, so the fusion path is live.
  Tape t2;
  GeneratorOutput with = a.generate(t2, ids, t2.leaf(test::random_mat(20, 64, 35)),
                                    t2.leaf(test::random_mat(1, 16, 33)),
                                    t2.leaf(test::random_mat(1, 32, 34)), 20);
  CHECK((with.postnet->value - out.postnet->value).cwiseAbs().maxCoeff() > 1e-4f);
}

TEST_CASE("generator responds to the speaker and global embeddings") {
  ParamStore ps(25);
  Acoustic a(ps, "a", small_cfg());
  const std::vector<int> ids = encode_text("speaker");
  const Mat glob = test::random_mat(1, 16, 36);
  const Mat spk_a = test::random_mat(1, 32, 37);
  const Mat spk_b = test::random_mat(1, 32, 38);

  auto mel = [&](const Mat& spk, const Mat& g) {
    Tape t;
    return Mat(a.generate(t, ids, nullptr, t.leaf(g), t.leaf(spk), 24).postnet->value);
  };
  const Mat base = mel(spk_a, glob);
  CHECK((base - mel(spk_b, glob)).cwiseAbs().maxCoeff() > 1e-4f);
  CHECK((base - mel(spk_a, test::random_mat(1, 16, 39))).cwiseAbs().maxCoeff() > 1e-4f);
  CHECK(base == mel(spk_a, glob));
}

TEST_CASE("generator validates conditioning shapes") {
  ParamStore ps(26);
  Acoustic a(ps, "a", small_cfg());
  const std::vector<int> ids = encode_text("shapes");
  Tape t;
  Node* glob = t.leaf(test::random_mat(1, 16, 40));
  Node* spk = t.leaf(test::random_mat(1, 32, 41));
  CHECK_THROWS_AS(a.generate(t, ids, nullptr, glob, t.leaf(test::random_mat(1, 31, 42)), 8),
                  Error);
  CHECK_THROWS_AS(a.generate(t, ids, nullptr, t.leaf(test::random_mat(2, 16, 43)), spk, 8),
                  Error);
  CHECK_THROWS_AS(a.generate(t, ids, t.leaf(test::random_mat(7, 64, 44)), glob, spk, 8), Error);
  CHECK_THROWS_AS(a.generate(t, ids, t.leaf(test::random_mat(8, 63, 45)), glob, spk, 8), Error);
}

TEST_CASE("positional modes differ but both stay finite") {
  AcousticConfig rot = small_cfg();
  AcousticConfig add = small_cfg();
  add.additive_pos = true;
  const std::vector<int> ids = encode_text("position");

  ParamStore ps_r(27), ps_a(27);
  Acoustic ar(ps_r, "a", rot), aa(ps_a, "a", add);
  Tape tr, ta;
  const Mat spk = test::random_mat(1, 32, 46);
  const Mat glob = test::random_mat(1, 16, 47);
  Node* mr = ar.generate(tr, ids, nullptr, tr.leaf(glob), tr.leaf(spk), 12).postnet;
  Node* ma = aa.generate(ta, ids, nullptr, ta.leaf(glob), ta.leaf(spk), 12).postnet;
  CHECK(mr->value.allFinite());
  CHECK(ma->value.allFinite());
  CHECK((mr->value - ma->value).cwiseAbs().maxCoeff() > 1e-4f);
}

TEST_CASE("gradients reach every generator stage") {
  ParamStore ps(28);
  Acoustic a(ps, "a", small_cfg());
  const std::vector<int> ids = encode_text("grad");
  Tape t;
  GeneratorOutput out =
      a.generate(t, ids, t.leaf(test::random_mat(10, 64, 48)), t.leaf(test::random_mat(1, 16, 49)),
                 t.leaf(test::random_mat(1, 32, 50)), 10);
  t.backward(mean_all(t, out.postnet));
  for (const char* name :
       {"a/emb.table", "a/enc_blk1.a.w", "a/enc_rnn.fwd.w_ih", "a/enc_rnn.bwd.w_hh",
        "a/adapter.w", "a/dec_blk1.a.w", "a/dec_rnn.w_ih", "a/dec_out.w", "a/post1.w",
        "a/post5.w"}) {
    Param* p = ps.find(name);
    REQUIRE_MESSAGE(p != nullptr, name);
    const Mat* g = t.grad(p);
    REQUIRE_MESSAGE(g != nullptr, "no gradient: " << name);
    CHECK_MESSAGE(g->cwiseAbs().maxCoeff() > 0.0f, "zero gradient: " << name);
  }
}

TEST_CASE("decoder and refined output differ by the residual path") {
  ParamStore ps(29);
  Acoustic a(ps, "a", small_cfg());
  const std::vector<int> ids = encode_text("residual");
  Tape t;
  GeneratorOutput out = a.generate(t, ids, nullptr, t.leaf(test::random_mat(1, 16, 51)),
                                   t.leaf(test::random_mat(1, 32, 52)), 14);
  // The refinement adds a correction on top of the decoder output; with
  // random init the correction is small but nonzero.
  const Mat diff = out.postnet->value - out.decoder->value;
  CHECK(diff.cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("odd fused width is rejected") {
  AcousticConfig cfg = small_cfg();
  cfg.global_dim = 15;  // E + S + G becomes odd, rotary pairs cannot form
  ParamStore ps(30);
  CHECK_THROWS_AS(Acoustic(ps, "a", cfg), Error);
}
