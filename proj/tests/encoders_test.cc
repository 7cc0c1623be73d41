// Copyright 2026 The dncalign Authors.
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
#include "dnc/encoders.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dnc/errors.h"
#include "test_util.h"

namespace dnc {
namespace {

struct Fixture {
  MMKGPair pair;
  EncoderInputs inputs;
  EncoderBank bank;
};

Fixture Make(double missing = 0.0) {
  GenConfig g = testing::SmallGen(12);
  g.clusters = 2;
  g.missing_rate = missing;
  g.modalities = {{"structure", 6}, {"image", 5}, {"text", 4}};
  Fixture f{GenerateSynthetic(g), {}, {}};
  f.inputs = PrepareInputs(TrainView(f.pair));
  f.bank = EncoderBank::Initialize(f.pair.modalities, 4, 3);
  return f;
}

double Probe(const EmbeddingTable& t, const std::vector<Matrix>& gl,
             const std::vector<Matrix>& gr) {
  double v = 0.0;
  for (std::size_t m = 0; m < gl.size(); ++m) {
    v += (t.left.modal[m].array() * gl[m].array()).sum();
    v += (t.right.modal[m].array() * gr[m].array()).sum();
  }
  return v;
}

TEST(Encode, RowsAreUnitOrZero) {
  const Fixture f = Make(0.3);
  const EmbeddingTable t = Encode(f.bank, f.inputs);
  bool saw_absent = false;
  for (const SideEmbeddings* s : {&t.left, &t.right}) {
    for (std::size_t m = 0; m < s->modal.size(); ++m) {
      ASSERT_EQ(s->modal[m].cols(), 4);
      for (Eigen::Index i = 0; i < s->modal[m].rows(); ++i) {
        const double norm = s->modal[m].row(i).norm();
        if (s->present[m][i]) {
          EXPECT_NEAR(norm, 1.0, 1e-6);
        } else {
          saw_absent = true;
          EXPECT_EQ(norm, 0.0);
        }
      }
    }
  }
  EXPECT_TRUE(saw_absent);
}

TEST(Encode, BackwardMatchesFiniteDifferences) {
  const Fixture f = Make(0.2);
  const EmbeddingTable t = Encode(f.bank, f.inputs);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<Matrix> gl, gr;
  for (int m = 0; m < f.bank.num_modalities(); ++m) {
    gl.push_back(Matrix::NullaryExpr(t.left.modal[m].rows(), 4,
                                     [&] { return normal(rng); }));
    gr.push_back(Matrix::NullaryExpr(t.right.modal[m].rows(), 4,
                                     [&] { return normal(rng); }));
  }
  EncoderBank grad = EncoderBank::ZerosLike(f.bank);
  EncodeBackward(f.bank, f.inputs, t, gl, gr, &grad);
  const Vector analytic = grad.Flatten();
  const Vector x = f.bank.Flatten();
  Vector numeric(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    EncoderBank b = f.bank;
    Vector xp = x;
    xp(i) += 1e-6;
    b.Assign(xp);
    const double up = Probe(Encode(b, f.inputs), gl, gr);
    xp(i) -= 2e-6;
    b.Assign(xp);
    const double down = Probe(Encode(b, f.inputs), gl, gr);
    numeric(i) = (up - down) / 2e-6;
  }
  EXPECT_LT((analytic - numeric).norm() / numeric.norm(), 1e-6);
}

TEST(Bank, FlattenAssignRoundTrip) {
  Fixture f = Make();
  const Vector x = f.bank.Flatten();
  EXPECT_EQ(x.size(), f.bank.num_parameters());
  EncoderBank zero = EncoderBank::ZerosLike(f.bank);
  EXPECT_EQ(zero.Flatten().norm(), 0.0);
  zero.Assign(x);
  EXPECT_EQ(zero.Flatten(), x);
}

TEST(Bank, InitializationIsSeeded) {
  const Fixture f = Make();
  EXPECT_EQ(EncoderBank::Initialize(f.pair.modalities, 4, 3).Flatten(),
            f.bank.Flatten());
  EXPECT_NE(EncoderBank::Initialize(f.pair.modalities, 4, 4).Flatten(),
            f.bank.Flatten());
}

TEST(Bank, CheckpointRoundTrip) {
  const Fixture f = Make();
  const auto dir = testing::TempDir("ckpt");
  SaveCheckpoint(f.bank, dir / "c.bin");
  const EncoderBank loaded = LoadCheckpoint(dir / "c.bin");
  EXPECT_EQ(loaded.embed_dim, f.bank.embed_dim);
  // Payloads are 32-bit floats.
  const Vector expect = f.bank.Flatten().cast<float>().cast<double>();
  EXPECT_EQ(loaded.Flatten(), expect);
  EXPECT_THROW(LoadCheckpoint(dir / "absent.bin"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Similarity, IsDotProduct) {
  Matrix a(2, 2), b(3, 2);
  a << 1, 0, 0, 1;
  b << 1, 0, 0.6, 0.8, 0, -1;
  const Matrix s = Similarity(a, b);
  EXPECT_DOUBLE_EQ(s(0, 1), 0.6);
  EXPECT_DOUBLE_EQ(s(1, 2), -1.0);
}

}  // namespace
}  // namespace dnc
