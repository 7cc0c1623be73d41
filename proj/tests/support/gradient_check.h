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
// Analytic vs central-difference gradient of the total objective on a tiny
// noisy instance.

#ifndef DNC_TESTS_SUPPORT_GRADIENT_CHECK_H_
#define DNC_TESTS_SUPPORT_GRADIENT_CHECK_H_

#include <algorithm>
#include <array>

#include "dnc/trainer.h"

namespace dnc::testing {

struct GradientCheck {
  double relative_error = 0.0;  // ||analytic - numeric|| / ||numeric||
  int parameters = 0;
  std::array<int, 3> subsets{};  // S_C, S_I, S_U among entity targets
};

inline GradientCheck CheckTotalLossGradient(LossVariant variant, double tau,
                                            double lambda,
                                            std::uint64_t seed = 7) {
  GenConfig g;
  g.n = 10;
  g.clusters = 2;
  g.seed = seed;
  g.missing_rate = 0.1;
  g.train_ratio = 0.6;
  g.modalities = {{"structure", 6}, {"image", 5}, {"text", 4}};
  const MMKGPair pair =
      InjectNoise(GenerateSynthetic(g), {0.3, 0.3, 0.3}, seed + 2);
  const TrainView view(pair);
  const EncoderInputs inputs = PrepareInputs(view);
  const EncoderBank bank = EncoderBank::Initialize(view.modalities(), 4, seed + 6);

  TrainOptions opt;
  opt.model.tau = tau;
  opt.objective.lambda = lambda;
  opt.objective.variant = variant;
  const EpochTargets t =
      RefreshTargets(bank, inputs, view.train_annotations(), opt, false);
  ObjectiveOptions oo{tau, lambda, variant};

  EncoderBank grad = EncoderBank::ZerosLike(bank);
  TotalLoss(bank, inputs, t.weights_left, t.weights_right, t.targets, oo, &grad);
  const Vector analytic = grad.Flatten();
  const Vector x = bank.Flatten();
  Vector numeric(x.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    EncoderBank b = bank;
    Vector xp = x;
    xp(i) += h;
    b.Assign(xp);
    const double up =
        TotalLoss(b, inputs, t.weights_left, t.weights_right, t.targets, oo).total;
    xp(i) -= 2 * h;
    b.Assign(xp);
    const double down =
        TotalLoss(b, inputs, t.weights_left, t.weights_right, t.targets, oo).total;
    numeric(i) = (up - down) / (2 * h);
  }
  GradientCheck out;
  out.parameters = static_cast<int>(x.size());
  out.relative_error =
      (analytic - numeric).norm() / std::max(numeric.norm(), 1e-300);
  for (const TrainTarget& target : t.targets) {
    ++out.subsets[static_cast<int>(target.subset)];
  }
  return out;
}

}  // namespace dnc::testing

#endif  // DNC_TESTS_SUPPORT_GRADIENT_CHECK_H_
