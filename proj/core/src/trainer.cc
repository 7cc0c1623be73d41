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
#include "dnc/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dnc {

TrainOptions TrainOptionsFor(const ExperimentConfig& config) {
  TrainOptions o;
  o.model = config.model;
  o.objective = config.objective;
  o.division = DivisionModeFor(config.ablation);
  o.drf = config.ablation.drf;
  o.init_seed = InitSeed(config);
  o.shuffle_seed = ShuffleSeed(config);
  return o;
}

Inference Infer(const EncoderBank& bank, const EncoderInputs& inputs, bool drf,
                double tau, double balance) {
  Inference out;
  out.table = Encode(bank, inputs);
  const int num_m = out.table.num_modalities();
  const int n_left = static_cast<int>(inputs.left.present.front().size());
  const int n_right = static_cast<int>(inputs.right.present.front().size());
  if (drf) {
    std::vector<Matrix> sims(num_m), sims_t(num_m);
    for (int m = 0; m < num_m; ++m) {
      sims[m] = Similarity(out.table.left.modal[m], out.table.right.modal[m]);
      sims_t[m] = sims[m].transpose();
    }
    const Matrix unit_left = Matrix::Ones(n_left, num_m);
    const Matrix unit_right = Matrix::Ones(n_right, num_m);
    const Matrix fused = Similarity(Fuse(out.table.left, unit_left).rows,
                                    Fuse(out.table.right, unit_right).rows);
    out.left_records = EstimateReliability(sims, fused, out.table.left.present,
                                           tau, balance);
    out.right_records = EstimateReliability(
        sims_t, fused.transpose(), out.table.right.present, tau, balance);
  }
  out.weights_left = FusionWeights(out.left_records, n_left, num_m, drf);
  out.weights_right = FusionWeights(out.right_records, n_right, num_m, drf);
  out.fused_left = Fuse(out.table.left, out.weights_left);
  out.fused_right = Fuse(out.table.right, out.weights_right);
  out.scores = out.fused_left.rows * out.fused_right.rows.transpose();
  return out;
}

namespace {

RefinedLabel LabelFor(Subset subset, int annotated, std::span<const double> s,
                      double consensus) {
  if (subset == Subset::kHighUncertainty) {
    return ExcludedLabel(annotated, static_cast<int>(s.size()));
  }
  return RefineLabel(annotated, s, consensus, subset);
}

}  // namespace

EpochTargets RefreshTargets(const EncoderBank& bank, const EncoderInputs& inputs,
                            const std::vector<TrainView::Annotation>& anchors,
                            const TrainOptions& options, bool warmup) {
  const double tau = options.model.tau;
  const double balance = options.model.balance;
  const double beta = options.objective.beta;
  const DivisionMode mode = warmup ? DivisionMode::kNone : options.division;

  const Inference inf = Infer(bank, inputs, options.drf, tau, balance);
  const int num_m = inf.table.num_modalities();
  const int n = static_cast<int>(anchors.size());

  EpochTargets out;
  out.weights_left = inf.weights_left;
  out.weights_right = inf.weights_right;
  out.targets.resize(n);
  out.records.resize(n);

  std::vector<Matrix> modal_rows(num_m);
  Matrix entity_rows(n, inf.scores.cols());
  std::vector<PairStats> entity_stats(n);
  std::vector<std::vector<PairStats>> modal_stats(num_m);
  std::vector<std::vector<int>> modal_members(num_m);
  for (int m = 0; m < num_m; ++m) modal_rows[m].resize(n, inf.scores.cols());

  int hits = 0;
  for (int a = 0; a < n; ++a) {
    const int left = anchors[a].left;
    const int right = anchors[a].right;
    entity_rows.row(a) = inf.scores.row(left);
    const auto s = RowSpan(entity_rows, a);
    const DirichletOpinion op = Evidence(s, tau);
    PairStats& st = entity_stats[a];
    st.uncertainty = op.uncertainty;
    st.consensus = Consensus(s, right);
    st.true_positive = ArgMax(s) == right;
    hits += st.true_positive;

    ReliabilityRecord& rec = out.records[a];
    rec.anchor = a;
    rec.entity = left;
    rec.entity_level = {st.uncertainty, st.consensus,
                        ReliabilityWeight(st.uncertainty, st.consensus, balance)};
    rec.modality_levels.assign(num_m, LevelReliability{});
    rec.estimated_index = ArgMax(s);

    for (int m = 0; m < num_m; ++m) {
      if (!inf.table.left.present[m][left]) continue;
      modal_rows[m].row(a) =
          inf.table.right.modal[m] * inf.table.left.modal[m].row(left).transpose();
      const auto sm = RowSpan(modal_rows[m], a);
      const DirichletOpinion om = Evidence(sm, tau);
      PairStats ms;
      ms.uncertainty = om.uncertainty;
      ms.consensus = Consensus(sm, right);
      ms.true_positive = ArgMax(sm) == right;
      modal_stats[m].push_back(ms);
      modal_members[m].push_back(a);
      rec.modality_levels[m] = {
          ms.uncertainty, ms.consensus,
          ReliabilityWeight(ms.uncertainty, ms.consensus, balance)};
    }
  }
  out.hits1 = n > 0 ? static_cast<double>(hits) / n : 0.0;

  out.division = DividePairs(entity_stats, beta, mode);
  out.modality_division.resize(num_m);
  for (int m = 0; m < num_m; ++m) {
    out.modality_division[m] = DividePairs(modal_stats[m], beta, mode);
  }

  for (int a = 0; a < n; ++a) {
    TrainTarget& t = out.targets[a];
    t.left = anchors[a].left;
    t.right = anchors[a].right;
    t.subset = out.division.tags[a];
    out.records[a].subset = t.subset;
    t.label = LabelFor(t.subset, t.right, RowSpan(entity_rows, a),
                       entity_stats[a].consensus);
    t.modality_subsets.assign(num_m, Subset::kClean);
    t.modality_labels.assign(num_m, RefinedLabel{});
  }
  for (int m = 0; m < num_m; ++m) {
    for (std::size_t i = 0; i < modal_members[m].size(); ++i) {
      const int a = modal_members[m][i];
      TrainTarget& t = out.targets[a];
      const Subset subset = out.modality_division[m].tags[i];
      t.modality_subsets[m] = subset;
      t.modality_labels[m] = LabelFor(subset, t.right, RowSpan(modal_rows[m], a),
                                      modal_stats[m][i].consensus);
    }
  }
  return out;
}

nlohmann::json ToJson(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"warmup", log.warmup},
          {"l_dr", log.l_dr},
          {"l_reg", log.l_reg},
          {"total", log.total},
          {"S_C", log.clean},
          {"S_I", log.low_consensus},
          {"S_U", log.high_uncertainty},
          {"hits@1_dev", log.hits1_dev}};
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double lr, double beta1,
                             double beta2, double epsilon)
    : lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Vector::Zero(size)),
      v_(Vector::Zero(size)) {}

void AdamOptimizer::Step(Vector& params, const Vector& grad) {
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  params.array() -=
      lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

TrainResult Train(const TrainView& view, const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  const EncoderInputs inputs = PrepareInputs(view);
  TrainResult result;
  result.bank = EncoderBank::Initialize(view.modalities(),
                                        options.model.embed_dim,
                                        options.init_seed);
  const auto& anchors = view.train_annotations();
  ObjectiveOptions objective;
  objective.tau = options.model.tau;
  objective.lambda = options.objective.lambda;
  objective.variant = options.objective.variant;

  AdamOptimizer adam(result.bank.num_parameters(), options.objective.lr);
  Vector params = result.bank.Flatten();
  std::mt19937_64 rng(options.shuffle_seed);
  std::vector<int> order(anchors.size());
  std::iota(order.begin(), order.end(), 0);
  const int batch = options.objective.batch_size;

  for (int epoch = 0; epoch < options.objective.epochs; ++epoch) {
    const bool warmup = epoch < options.objective.warmup_epochs;
    const EpochTargets targets =
        RefreshTargets(result.bank, inputs, anchors, options, warmup);
    std::shuffle(order.begin(), order.end(), rng);

    EpochLog log;
    log.epoch = epoch;
    log.warmup = warmup;
    log.clean = static_cast<int>(targets.division.clean.size());
    log.low_consensus = static_cast<int>(targets.division.low_consensus.size());
    log.high_uncertainty =
        static_cast<int>(targets.division.high_uncertainty.size());
    std::vector<TrainTarget> chunk;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      chunk.clear();
      for (std::size_t i = start; i < stop; ++i) {
        chunk.push_back(targets.targets[order[i]]);
      }
      EncoderBank grad = EncoderBank::ZerosLike(result.bank);
      const LossBreakdown loss =
          TotalLoss(result.bank, inputs, targets.weights_left,
                    targets.weights_right, chunk, objective, &grad);
      const double share = static_cast<double>(stop - start) / order.size();
      log.l_dr += share * loss.l_dr_total();
      log.l_reg += share * loss.l_reg_total();
      log.total += share * loss.total;
      adam.Step(params, grad.Flatten());
      result.bank.Assign(params);
    }
    // Train-anchor accuracy under the epoch's fusion weights.
    const EmbeddingTable table = Encode(result.bank, inputs);
    const FusedTable left = Fuse(table.left, targets.weights_left);
    const FusedTable right = Fuse(table.right, targets.weights_right);
    int hits = 0;
    for (const auto& a : anchors) {
      const Vector s = right.rows * left.rows.row(a.left).transpose();
      hits += ArgMax(AsSpan(s)) == a.right;
    }
    log.hits1_dev =
        anchors.empty() ? 0.0 : static_cast<double>(hits) / anchors.size();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.final_targets = RefreshTargets(result.bank, inputs, anchors, options,
                                        /*warmup=*/false);
  return result;
}

nlohmann::json ToJson(const ReliabilityRecord& r,
                      const std::vector<ModalitySpec>& modalities) {
  nlohmann::json modal = nlohmann::json::object();
  for (std::size_t m = 0; m < r.modality_levels.size(); ++m) {
    const LevelReliability& l = r.modality_levels[m];
    modal[modalities[m].name] = {
        {"u", l.uncertainty}, {"c", l.consensus}, {"w", l.weight}};
  }
  return {{"anchor", r.anchor},
          {"entity", r.entity},
          {"u", r.entity_level.uncertainty},
          {"c", r.entity_level.consensus},
          {"w", r.entity_level.weight},
          {"subset", std::string(SubsetName(r.subset))},
          {"estimated_index", r.estimated_index},
          {"modalities", modal}};
}

}  // namespace dnc
