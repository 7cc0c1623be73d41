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
#include "dnc/dataset.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnc/errors.h"

namespace dnc {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 24> kSyllables = {
    "ka", "lo", "mir", "ta", "ven", "dor", "si", "ral", "ne", "bo", "tun",
    "gar", "el", "vi", "sha", "mon", "ri", "ca", "pel", "zu", "on", "fa",
    "ber", "lin"};

std::string MakeName(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> syllable(0, kSyllables.size() - 1);
  std::uniform_int_distribution<int> length(2, 3);
  std::string name;
  for (int word = 0; word < 2; ++word) {
    if (word > 0) name += ' ';
    std::string w;
    const int n = length(rng);
    for (int k = 0; k < n; ++k) w += kSyllables[syllable(rng)];
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    name += w;
  }
  return name;
}

std::vector<std::uint8_t> Zeros(int m) { return std::vector<std::uint8_t>(m); }

CorruptionMask CleanMask(int m) { return {false, Zeros(m), Zeros(m), Zeros(m)}; }

bool IsZeroRow(const FeatureMatrix& f, Eigen::Index row) {
  return (f.row(row).array() == 0.0f).all();
}

std::string_view KindName(CorruptionEvent::Kind kind) {
  switch (kind) {
    case CorruptionEvent::Kind::kEntityEntity:
      return "ee";
    case CorruptionEvent::Kind::kEntityAttribute:
      return "ea";
    case CorruptionEvent::Kind::kAttributeAttribute:
      return "aa";
  }
  return "";
}

}  // namespace

std::string_view SideName(Side side) {
  return side == Side::kLeft ? "left" : "right";
}

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

ModalityKind ModalitySpec::kind() const {
  if (name == "structure") return ModalityKind::kStructure;
  if (name == "text" || name == "name") return ModalityKind::kText;
  return ModalityKind::kVisual;
}

bool CorruptionMask::any() const {
  auto set = [](const std::vector<std::uint8_t>& v) {
    return std::any_of(v.begin(), v.end(), [](std::uint8_t b) { return b; });
  };
  return ee || set(ea_left) || set(ea_right) || set(aa);
}

int MMKGPair::FindModality(std::string_view name) const {
  for (int m = 0; m < num_modalities(); ++m) {
    if (modalities[m].name == name) return m;
  }
  return -1;
}

bool MMKGPair::operator==(const MMKGPair& other) const {
  if (modalities.size() != other.modalities.size()) return false;
  for (std::size_t m = 0; m < modalities.size(); ++m) {
    if (modalities[m].name != other.modalities[m].name ||
        modalities[m].dim != other.modalities[m].dim) {
      return false;
    }
  }
  return left == other.left && right == other.right &&
         anchors == other.anchors && seed == other.seed &&
         corruption_log == other.corruption_log;
}

void Validate(const MMKGPair& pair) {
  const int num_m = pair.num_modalities();
  for (Side s : {Side::kLeft, Side::kRight}) {
    const GraphSide& g = pair.side(s);
    const int n = static_cast<int>(g.entities.size());
    if (static_cast<int>(g.features.size()) != num_m) {
      throw DataError(std::string(SideName(s)) +
                      " graph: feature matrix count != modality count");
    }
    for (int m = 0; m < num_m; ++m) {
      if (g.features[m].cols() != pair.modalities[m].dim) {
        throw DataError(std::string(SideName(s)) + " modality '" +
                        pair.modalities[m].name + "': dim mismatch");
      }
    }
    for (const EntityRecord& e : g.entities) {
      if (static_cast<int>(e.attribute_rows.size()) != num_m) {
        throw DataError("entity " + std::to_string(e.id) +
                        ": attribute row count != modality count");
      }
      for (int m = 0; m < num_m; ++m) {
        const int row = e.attribute_rows[m];
        if (row != kAbsent && (row < 0 || row >= g.features[m].rows())) {
          throw DataError("entity " + std::to_string(e.id) +
                          ": attribute row out of range");
        }
      }
    }
    for (const Triple& t : g.triples) {
      if (t.head < 0 || t.head >= n || t.tail < 0 || t.tail >= n) {
        throw DataError(std::string(SideName(s)) +
                        " triple references a missing entity");
      }
    }
  }
  const int n_left = static_cast<int>(pair.left.entities.size());
  const int n_right = static_cast<int>(pair.right.entities.size());
  std::vector<int> left_uses(n_left), right_uses(n_right);
  for (const AnchorPair& a : pair.anchors) {
    if (a.left < 0 || a.left >= n_left || a.right < 0 || a.right >= n_right) {
      throw DataError("anchor (" + std::to_string(a.left) + ", " +
                      std::to_string(a.right) + ") is out of range");
    }
    if (a.split == Split::kTrain &&
        (++left_uses[a.left] > 1 || ++right_uses[a.right] > 1)) {
      throw DataError("entity appears in more than one train anchor");
    }
  }
}

// ---------------------------------------------------------------- views

TrainView::TrainView(const MMKGPair& pair) : pair_(&pair) {
  for (const AnchorPair& a : pair.anchors) {
    if (a.split == Split::kTrain) annotations_.push_back({a.left, a.right});
  }
}

int TrainView::num_entities(Side side) const {
  return static_cast<int>(pair_->side(side).entities.size());
}

const std::vector<Triple>& TrainView::triples(Side side) const {
  return pair_->side(side).triples;
}

const std::string& TrainView::name(Side side, int entity) const {
  return pair_->side(side).entities[entity].name;
}

std::span<const float> TrainView::attribute(Side side, int entity,
                                            int modality) const {
  const GraphSide& g = pair_->side(side);
  const int row = g.entities[entity].attribute_rows[modality];
  if (row == kAbsent) return {};
  const FeatureMatrix& f = g.features[modality];
  return {f.data() + row * f.cols(), static_cast<std::size_t>(f.cols())};
}

int TrainView::attribute_dim(int modality) const {
  return pair_->modalities[modality].dim;
}

std::vector<const AnchorPair*> EvalView::anchors(Split split) const {
  std::vector<const AnchorPair*> out;
  for (const AnchorPair& a : pair_->anchors) {
    if (a.split == split) out.push_back(&a);
  }
  return out;
}

bool EvalView::attribute_clean(Side side, int entity, int modality) const {
  return pair_->side(side).entities[entity].ea_indicator[modality] != 0;
}

// ------------------------------------------------------------ generator

MMKGPair GenerateSynthetic(const GenConfig& config) {
  if (config.n < 4) throw ConfigError("synthetic generator needs n >= 4");
  if (config.latent_dim < 2) throw ConfigError("latent_dim must be >= 2");
  if (config.clusters < 1) throw ConfigError("clusters must be >= 1");
  if (config.modalities.empty()) throw ConfigError("no modalities");
  for (const GenModality& m : config.modalities) {
    if (m.dim < 2) {
      throw ConfigError("modality '" + m.name + "' needs dim >= 2");
    }
  }
  if (config.train_ratio <= 0.0 || config.train_ratio >= 1.0) {
    throw ConfigError("train_ratio must lie in (0, 1)");
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = config.n;
  const int dz = config.latent_dim;
  const int num_m = static_cast<int>(config.modalities.size());

  MMKGPair pair;
  pair.seed = config.seed;
  for (const GenModality& m : config.modalities) {
    pair.modalities.push_back({m.name, m.dim});
  }

  Matrix centers(config.clusters, dz);
  for (Eigen::Index i = 0; i < centers.size(); ++i) {
    centers.data()[i] = gauss(rng);
  }
  Matrix latent(n, dz);
  for (int i = 0; i < n; ++i) {
    const int cluster = i % config.clusters;
    for (int k = 0; k < dz; ++k) {
      latent(i, k) = centers(cluster, k) + config.cluster_spread * gauss(rng);
    }
  }

  // Right index of the counterpart of left entity i.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::string> names(n);
  for (int i = 0; i < n; ++i) names[i] = MakeName(rng);

  for (Side s : {Side::kLeft, Side::kRight}) {
    GraphSide& g = pair.side(s);
    g.entities.resize(n);
    g.features.resize(num_m);
    for (int m = 0; m < num_m; ++m) {
      g.features[m] = FeatureMatrix::Zero(n, config.modalities[m].dim);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      const int id = s == Side::kLeft ? i : perm[i];
      EntityRecord& e = pair.side(s).entities[id];
      e.id = id;
      e.name = names[i];
      e.attribute_rows.assign(num_m, id);
      e.ea_indicator.assign(num_m, 1);
    }
  }

  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(dz));
  for (int m = 0; m < num_m; ++m) {
    const int dim = config.modalities[m].dim;
    Matrix proj_left(dz, dim), proj_right(dz, dim);
    for (Eigen::Index k = 0; k < proj_left.size(); ++k) {
      proj_left.data()[k] = proj_scale * gauss(rng);
    }
    for (Eigen::Index k = 0; k < proj_right.size(); ++k) {
      proj_right.data()[k] =
          proj_left.data()[k] + config.side_distortion * proj_scale * gauss(rng);
    }
    const bool can_be_missing =
        pair.modalities[m].kind() != ModalityKind::kStructure;
    for (Side s : {Side::kLeft, Side::kRight}) {
      const Matrix& proj = s == Side::kLeft ? proj_left : proj_right;
      GraphSide& g = pair.side(s);
      for (int i = 0; i < n; ++i) {
        const int id = s == Side::kLeft ? i : perm[i];
        const bool missing =
            can_be_missing && config.missing_rate > 0.0 &&
            unit(rng) < config.missing_rate;
        Eigen::RowVectorXd view = latent.row(i) * proj;
        for (int c = 0; c < dim; ++c) view(c) += config.view_noise * gauss(rng);
        if (missing) {
          g.entities[id].attribute_rows[m] = kAbsent;
          g.entities[id].ea_indicator[m] = 0;
        } else {
          g.features[m].row(id) = view.cast<float>();
        }
      }
    }
  }

  // Structural triples: each entity links to its latent-nearest neighbours;
  // every edge is dropped independently per side.
  const int k_nn = std::min(config.neighbors, n - 1);
  Eigen::VectorXd sq_norms = latent.rowwise().squaredNorm();
  Matrix gram = latent * latent.transpose();
  std::uniform_int_distribution<int> relation(0, std::max(config.relations, 1) - 1);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    auto dist = [&](int j) { return sq_norms(i) + sq_norms(j) - 2 * gram(i, j); };
    std::partial_sort(order.begin(), order.begin() + k_nn + 1, order.end(),
                      [&](int a, int b) {
                        const double da = a == i ? -1.0 : dist(a);
                        const double db = b == i ? -1.0 : dist(b);
                        return da < db || (da == db && a < b);
                      });
    for (int r = 1; r <= k_nn; ++r) {
      const int j = order[r];
      const int rel = relation(rng);
      if (unit(rng) >= config.edge_drop) {
        pair.left.triples.push_back({i, rel, j});
      }
      if (unit(rng) >= config.edge_drop) {
        pair.right.triples.push_back({perm[i], rel, perm[j]});
      }
    }
  }

  std::vector<int> lefts(n);
  std::iota(lefts.begin(), lefts.end(), 0);
  std::shuffle(lefts.begin(), lefts.end(), rng);
  const int n_train = std::clamp(
      static_cast<int>(std::lround(config.train_ratio * n)), 1, n - 1);
  std::vector<Split> split(n, Split::kTest);
  for (int k = 0; k < n_train; ++k) split[lefts[k]] = Split::kTrain;
  for (int i = 0; i < n; ++i) {
    pair.anchors.push_back({i, perm[i], split[i], perm[i], CleanMask(num_m)});
  }
  return pair;
}

// ------------------------------------------------------------- injector

namespace {

void CorruptName(std::string& name, double rate, std::mt19937_64& rng) {
  std::vector<int> positions;
  for (int k = 0; k < static_cast<int>(name.size()); ++k) {
    if (name[k] != ' ') positions.push_back(k);
  }
  if (positions.empty()) return;
  const int count = std::clamp(
      static_cast<int>(std::lround(rate * positions.size())), 1,
      static_cast<int>(positions.size()));
  std::shuffle(positions.begin(), positions.end(), rng);
  std::uniform_int_distribution<int> letter(0, 25);
  for (int k = 0; k < count; ++k) {
    char& c = name[positions[k]];
    char r;
    do {
      r = static_cast<char>('a' + letter(rng));
    } while (r == c);
    c = r;
  }
}

std::vector<int> ChooseSubset(std::vector<int> pool, int count,
                              std::mt19937_64& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(count);
  return pool;
}

}  // namespace

MMKGPair InjectNoise(const MMKGPair& pair, const NoiseRatios& ratios,
                     std::uint64_t seed, const InjectOptions& options) {
  for (double r : {ratios.ee, ratios.ea, ratios.aa}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError("noise ratios must lie in [0, 1]");
    }
  }
  MMKGPair out = pair;
  const int num_m = out.num_modalities();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<int> train;
  for (int k = 0; k < static_cast<int>(out.anchors.size()); ++k) {
    AnchorPair& a = out.anchors[k];
    if (a.mask.ea_left.size() != static_cast<std::size_t>(num_m)) {
      a.mask = CleanMask(num_m);
    }
    if (a.split == Split::kTrain) train.push_back(k);
  }
  const int n_train = static_cast<int>(train.size());
  const int n_ee = static_cast<int>(std::floor(ratios.ee * n_train));
  if (n_train > 0 && n_ee >= n_train) {
    throw DataError("E-E ratio would corrupt every train anchor");
  }

  // E-E.
  if (n_ee > 0) {
    const int n_right = static_cast<int>(out.right.entities.size());
    std::vector<std::uint8_t> used(n_right);
    for (int k : train) used[out.anchors[k].right] = 1;
    std::vector<int> chosen = ChooseSubset(train, n_ee, rng);
    std::sort(chosen.begin(), chosen.end());
    for (int k : chosen) {
      AnchorPair& a = out.anchors[k];
      std::vector<int> pool;
      for (int j = 0; j < n_right; ++j) {
        if (!used[j] && j != a.planted_right && j != a.right) pool.push_back(j);
      }
      if (pool.empty()) throw DataError("no replacement entity available");
      const int pick =
          pool[std::uniform_int_distribution<int>(0, pool.size() - 1)(rng)];
      CorruptionEvent ev;
      ev.kind = CorruptionEvent::Kind::kEntityEntity;
      ev.side = Side::kRight;
      ev.anchor = k;
      ev.source = a.right;
      ev.replacement = pick;
      out.corruption_log.push_back(std::move(ev));
      used[a.right] = 0;
      used[pick] = 1;
      a.right = pick;
      a.mask.ee = true;
    }
  }

  // E-A: within-graph derangement of attribute rows.  Entities of test
  // anchors keep their attributes.
  for (Side s : {Side::kLeft, Side::kRight}) {
    GraphSide& g = out.side(s);
    std::vector<std::uint8_t> in_test(g.entities.size(), 0);
    for (const AnchorPair& a : out.anchors) {
      if (a.split == Split::kTest) {
        in_test[s == Side::kLeft ? a.left : a.right] = 1;
      }
    }
    for (int m = 0; m < num_m; ++m) {
      if (out.modalities[m].kind() == ModalityKind::kStructure) continue;
      std::vector<int> present, eligible;
      for (const EntityRecord& e : g.entities) {
        if (e.attribute_rows[m] == kAbsent) continue;
        present.push_back(e.id);
        if (!in_test[e.id]) eligible.push_back(e.id);
      }
      const int count = static_cast<int>(std::floor(ratios.ea * eligible.size()));
      if (count == 0 || present.size() < 2) continue;
      std::vector<int> chosen = ChooseSubset(eligible, count, rng);
      std::vector<int> sources(count);
      if (count >= 2) {
        for (int k = 0; k < count; ++k) sources[k] = chosen[(k + 1) % count];
      } else {
        std::vector<int> others;
        for (int e : present) {
          if (e != chosen[0]) others.push_back(e);
        }
        sources[0] = others[std::uniform_int_distribution<int>(
            0, others.size() - 1)(rng)];
      }
      FeatureMatrix& f = g.features[m];
      const FeatureMatrix before = f;
      for (int k = 0; k < count; ++k) {
        EntityRecord& e = g.entities[chosen[k]];
        const int row = e.attribute_rows[m];
        const int src_row = g.entities[sources[k]].attribute_rows[m];
        CorruptionEvent ev;
        ev.kind = CorruptionEvent::Kind::kEntityAttribute;
        ev.side = s;
        ev.modality = m;
        ev.entity = e.id;
        ev.source = sources[k];
        ev.original_row.assign(before.row(row).data(),
                               before.row(row).data() + f.cols());
        out.corruption_log.push_back(std::move(ev));
        f.row(row) = before.row(src_row);
        e.ea_indicator[m] = 0;
      }
    }
  }

  // A-A: perturb the right attribute of chosen train pairs.
  for (int m = 0; m < num_m; ++m) {
    const ModalityKind kind = out.modalities[m].kind();
    if (kind == ModalityKind::kStructure) continue;
    FeatureMatrix& f = out.right.features[m];
    std::vector<int> eligible;
    for (int k : train) {
      if (out.right.entities[out.anchors[k].right].attribute_rows[m] != kAbsent) {
        eligible.push_back(k);
      }
    }
    const int count = static_cast<int>(std::floor(ratios.aa * eligible.size()));
    if (count == 0) continue;
    // Per-feature standard deviation over present rows.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.cols());
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(f.cols());
    int rows = 0;
    for (const EntityRecord& e : out.right.entities) {
      if (e.attribute_rows[m] == kAbsent) continue;
      Eigen::VectorXd r = f.row(e.attribute_rows[m]).transpose().cast<double>();
      mean += r;
      sq += r.cwiseProduct(r);
      ++rows;
    }
    mean /= rows;
    Eigen::VectorXd stddev =
        (sq / rows - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
    std::vector<int> chosen = ChooseSubset(eligible, count, rng);
    std::sort(chosen.begin(), chosen.end());
    for (int k : chosen) {
      AnchorPair& a = out.anchors[k];
      EntityRecord& e = out.right.entities[a.right];
      const int row = e.attribute_rows[m];
      CorruptionEvent ev;
      ev.kind = CorruptionEvent::Kind::kAttributeAttribute;
      ev.side = Side::kRight;
      ev.modality = m;
      ev.anchor = k;
      ev.entity = a.right;
      ev.original_row.assign(f.row(row).data(), f.row(row).data() + f.cols());
      for (int c = 0; c < f.cols(); ++c) {
        f(row, c) += static_cast<float>(options.aa_feature_scale * stddev(c) *
                                        gauss(rng));
      }
      if (kind == ModalityKind::kText) {
        ev.original_name = e.name;
        CorruptName(e.name, options.aa_char_rate, rng);
      }
      out.corruption_log.push_back(std::move(ev));
      a.mask.aa[m] = 1;
    }
  }

  for (AnchorPair& a : out.anchors) {
    for (int m = 0; m < num_m; ++m) {
      a.mask.ea_left[m] = out.left.entities[a.left].ea_indicator[m] == 0 &&
                          out.left.entities[a.left].attribute_rows[m] != kAbsent;
      a.mask.ea_right[m] =
          out.right.entities[a.right].ea_indicator[m] == 0 &&
          out.right.entities[a.right].attribute_rows[m] != kAbsent;
    }
  }

  if (n_train > 0) {
    const bool any_clean = std::any_of(train.begin(), train.end(), [&](int k) {
      const CorruptionMask& mask = out.anchors[k].mask;
      return !mask.ee && std::none_of(mask.aa.begin(), mask.aa.end(),
                                      [](std::uint8_t b) { return b; });
    });
    if (!any_clean) {
      throw DataError("noise ratios leave no clean train anchor");
    }
  }
  return out;
}

MMKGPair ReplayPristine(const MMKGPair& pair) {
  MMKGPair out = pair;
  for (auto it = out.corruption_log.rbegin(); it != out.corruption_log.rend();
       ++it) {
    const CorruptionEvent& ev = *it;
    switch (ev.kind) {
      case CorruptionEvent::Kind::kEntityEntity:
        out.anchors[ev.anchor].right = ev.source;
        break;
      case CorruptionEvent::Kind::kEntityAttribute:
      case CorruptionEvent::Kind::kAttributeAttribute: {
        GraphSide& g = out.side(ev.side);
        EntityRecord& e = g.entities[ev.entity];
        FeatureMatrix& f = g.features[ev.modality];
        f.row(e.attribute_rows[ev.modality]) =
            Eigen::Map<const Eigen::RowVectorXf>(ev.original_row.data(),
                                                 ev.original_row.size());
        if (ev.kind == CorruptionEvent::Kind::kEntityAttribute) {
          e.ea_indicator[ev.modality] = 1;
        } else if (!ev.original_name.empty()) {
          e.name = ev.original_name;
        }
        break;
      }
    }
  }
  out.corruption_log.clear();
  for (AnchorPair& a : out.anchors) a.mask = CleanMask(out.num_modalities());
  return out;
}

// ------------------------------------------------------------------- io

namespace {

std::string Location(const std::filesystem::path& file, int line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::ifstream OpenInput(const std::filesystem::path& file,
                        std::ios::openmode mode = std::ios::in) {
  std::ifstream in(file, mode);
  if (!in) throw DataError(file.filename().string() + ": missing file");
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path& file,
                         std::ios::openmode mode = std::ios::out) {
  std::ofstream out(file, mode | std::ios::trunc);
  if (!out) throw DataError(file.string() + ": cannot open for writing");
  return out;
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

int ParseInt(const std::string& text, const std::filesystem::path& file,
             int line) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw DataError(Location(file, line) + ": expected an integer, got '" +
                    text + "'");
  }
  return value;
}

std::string FeatureFile(Side side, const std::string& modality) {
  return "feat_" + std::string(SideName(side)) + "_" + modality + ".f32";
}

void WriteFeatures(const FeatureMatrix& f, const std::filesystem::path& file) {
  std::ofstream out = OpenOutput(file, std::ios::binary);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  } else {
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      auto bits = std::bit_cast<std::uint32_t>(f.data()[k]);
      bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

FeatureMatrix ReadFeatures(const std::filesystem::path& file, int rows,
                           int dim) {
  std::ifstream in = OpenInput(file, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::int64_t>(in.tellg());
  in.seekg(0);
  const std::int64_t expected =
      static_cast<std::int64_t>(rows) * dim * sizeof(float);
  if (bytes != expected) {
    std::ostringstream msg;
    msg << file.filename().string() << ": dim mismatch: manifest expects "
        << rows << " rows x " << dim << " columns (" << expected
        << " bytes), file has " << bytes << " bytes";
    if (rows > 0 && bytes % (static_cast<std::int64_t>(rows) * 4) == 0) {
      msg << " (" << bytes / (rows * 4) << " columns per row)";
    }
    throw DataError(msg.str());
  }
  FeatureMatrix f(rows, dim);
  in.read(reinterpret_cast<char*>(f.data()), expected);
  if constexpr (std::endian::native != std::endian::little) {
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      auto bits = std::bit_cast<std::uint32_t>(f.data()[k]);
      f.data()[k] = std::bit_cast<float>(__builtin_bswap32(bits));
    }
  }
  return f;
}

json EventToJson(const CorruptionEvent& ev, const MMKGPair& pair) {
  json j;
  j["kind"] = KindName(ev.kind);
  j["side"] = SideName(ev.side);
  if (ev.modality >= 0) j["modality"] = pair.modalities[ev.modality].name;
  if (ev.anchor >= 0) j["anchor"] = ev.anchor;
  if (ev.entity >= 0) j["entity"] = ev.entity;
  if (ev.source >= 0) j["source"] = ev.source;
  if (ev.replacement >= 0) j["replacement"] = ev.replacement;
  if (!ev.original_row.empty()) j["original_row"] = ev.original_row;
  if (!ev.original_name.empty()) j["original_name"] = ev.original_name;
  return j;
}

CorruptionEvent EventFromJson(const json& j, const MMKGPair& pair) {
  CorruptionEvent ev;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ee") {
    ev.kind = CorruptionEvent::Kind::kEntityEntity;
  } else if (kind == "ea") {
    ev.kind = CorruptionEvent::Kind::kEntityAttribute;
  } else if (kind == "aa") {
    ev.kind = CorruptionEvent::Kind::kAttributeAttribute;
  } else {
    throw DataError("masks.json: unknown event kind '" + kind + "'");
  }
  ev.side = j.at("side").get<std::string>() == "left" ? Side::kLeft
                                                       : Side::kRight;
  if (j.contains("modality")) {
    ev.modality = pair.FindModality(j["modality"].get<std::string>());
    if (ev.modality < 0) throw DataError("masks.json: unknown modality");
  }
  ev.anchor = j.value("anchor", -1);
  ev.entity = j.value("entity", -1);
  ev.source = j.value("source", -1);
  ev.replacement = j.value("replacement", -1);
  if (j.contains("original_row")) {
    ev.original_row = j["original_row"].get<std::vector<float>>();
  }
  ev.original_name = j.value("original_name", std::string());
  return ev;
}

}  // namespace

void SavePair(const MMKGPair& pair, const std::filesystem::path& dir) {
  Validate(pair);
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["modalities"] = json::array();
  for (int m = 0; m < pair.num_modalities(); ++m) {
    manifest["modalities"].push_back(
        {{"name", pair.modalities[m].name},
         {"dim", pair.modalities[m].dim},
         {"rows_left", pair.left.features[m].rows()},
         {"rows_right", pair.right.features[m].rows()}});
  }
  manifest["n_left"] = pair.left.entities.size();
  manifest["n_right"] = pair.right.entities.size();
  manifest["seed"] = pair.seed;
  OpenOutput(dir / "manifest.json") << manifest.dump(2) << "\n";

  for (Side s : {Side::kLeft, Side::kRight}) {
    const GraphSide& g = pair.side(s);
    const std::string side(SideName(s));
    std::ofstream ent = OpenOutput(dir / ("entities_" + side + ".tsv"));
    for (const EntityRecord& e : g.entities) ent << e.id << '\t' << e.name << '\n';
    std::ofstream tri = OpenOutput(dir / ("triples_" + side + ".tsv"));
    for (const Triple& t : g.triples) {
      tri << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
    }
    for (int m = 0; m < pair.num_modalities(); ++m) {
      FeatureMatrix f = g.features[m];
      for (const EntityRecord& e : g.entities) {
        if (e.attribute_rows[m] == kAbsent) f.row(e.id).setZero();
      }
      WriteFeatures(f, dir / FeatureFile(s, pair.modalities[m].name));
    }
  }

  std::ofstream anchors = OpenOutput(dir / "anchors.tsv");
  for (const AnchorPair& a : pair.anchors) {
    anchors << a.left << '\t' << a.right << '\t' << SplitName(a.split) << '\n';
  }

  json masks;
  masks["anchors"] = json::array();
  for (const AnchorPair& a : pair.anchors) {
    masks["anchors"].push_back({{"planted_right", a.planted_right},
                                {"ee", a.mask.ee},
                                {"ea_left", a.mask.ea_left},
                                {"ea_right", a.mask.ea_right},
                                {"aa", a.mask.aa}});
  }
  masks["log"] = json::array();
  for (const CorruptionEvent& ev : pair.corruption_log) {
    masks["log"].push_back(EventToJson(ev, pair));
  }
  OpenOutput(dir / "masks.json") << masks.dump() << "\n";
}

MMKGPair LoadPair(const std::filesystem::path& dir) {
  MMKGPair pair;
  json manifest;
  try {
    manifest = json::parse(OpenInput(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest.json: ") + e.what());
  }
  int n_left = 0, n_right = 0;
  std::vector<std::pair<int, int>> rows;
  try {
    n_left = manifest.at("n_left").get<int>();
    n_right = manifest.at("n_right").get<int>();
    pair.seed = manifest.value("seed", std::uint64_t{0});
    for (const json& m : manifest.at("modalities")) {
      pair.modalities.push_back(
          {m.at("name").get<std::string>(), m.at("dim").get<int>()});
      rows.emplace_back(m.at("rows_left").get<int>(),
                        m.at("rows_right").get<int>());
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest.json: ") + e.what());
  }
  const int num_m = pair.num_modalities();

  for (Side s : {Side::kLeft, Side::kRight}) {
    GraphSide& g = pair.side(s);
    const std::string side(SideName(s));
    const int n = s == Side::kLeft ? n_left : n_right;

    const auto ent_file = dir / ("entities_" + side + ".tsv");
    std::ifstream ent = OpenInput(ent_file);
    std::string line;
    for (int line_no = 1; std::getline(ent, line); ++line_no) {
      if (line.empty()) continue;
      const std::vector<std::string> fields = SplitTabs(line);
      if (fields.size() != 2) {
        throw DataError(Location(ent_file, line_no) +
                        ": expected 'id<TAB>name'");
      }
      const int id = ParseInt(fields[0], ent_file, line_no);
      if (id != static_cast<int>(g.entities.size())) {
        throw DataError(Location(ent_file, line_no) + ": entity id " +
                        fields[0] + " out of sequence");
      }
      EntityRecord e;
      e.id = id;
      e.name = fields[1];
      e.attribute_rows.assign(num_m, id);
      e.ea_indicator.assign(num_m, 1);
      g.entities.push_back(std::move(e));
    }
    if (static_cast<int>(g.entities.size()) != n) {
      throw DataError(ent_file.filename().string() + ": manifest declares " +
                      std::to_string(n) + " entities, file has " +
                      std::to_string(g.entities.size()));
    }

    const auto tri_file = dir / ("triples_" + side + ".tsv");
    std::ifstream tri = OpenInput(tri_file);
    for (int line_no = 1; std::getline(tri, line); ++line_no) {
      if (line.empty()) continue;
      const std::vector<std::string> fields = SplitTabs(line);
      if (fields.size() != 3) {
        throw DataError(Location(tri_file, line_no) +
                        ": expected 'head<TAB>relation<TAB>tail'");
      }
      Triple t{ParseInt(fields[0], tri_file, line_no),
               ParseInt(fields[1], tri_file, line_no),
               ParseInt(fields[2], tri_file, line_no)};
      if (t.head < 0 || t.head >= n || t.tail < 0 || t.tail >= n) {
        throw DataError(Location(tri_file, line_no) +
                        ": dangling entity index in triple");
      }
      g.triples.push_back(t);
    }

    for (int m = 0; m < num_m; ++m) {
      const int r = s == Side::kLeft ? rows[m].first : rows[m].second;
      if (r != n) {
        throw DataError("manifest.json: modality '" + pair.modalities[m].name +
                        "' has " + std::to_string(r) + " " + side +
                        " rows, expected one per entity");
      }
      g.features.push_back(ReadFeatures(
          dir / FeatureFile(s, pair.modalities[m].name), r,
          pair.modalities[m].dim));
      for (EntityRecord& e : g.entities) {
        if (IsZeroRow(g.features[m], e.id)) {
          e.attribute_rows[m] = kAbsent;
          e.ea_indicator[m] = 0;
        }
      }
    }
  }

  const auto anchor_file = dir / "anchors.tsv";
  std::ifstream anchors = OpenInput(anchor_file);
  std::string line;
  for (int line_no = 1; std::getline(anchors, line); ++line_no) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitTabs(line);
    if (fields.size() != 3) {
      throw DataError(Location(anchor_file, line_no) +
                      ": expected 'left<TAB>right<TAB>split'");
    }
    AnchorPair a;
    a.left = ParseInt(fields[0], anchor_file, line_no);
    a.right = ParseInt(fields[1], anchor_file, line_no);
    if (a.left < 0 || a.left >= n_left) {
      throw DataError(Location(anchor_file, line_no) +
                      ": dangling entity index " + fields[0] +
                      " (left graph has " + std::to_string(n_left) +
                      " entities)");
    }
    if (a.right < 0 || a.right >= n_right) {
      throw DataError(Location(anchor_file, line_no) +
                      ": dangling entity index " + fields[1] +
                      " (right graph has " + std::to_string(n_right) +
                      " entities)");
    }
    if (fields[2] == "train") {
      a.split = Split::kTrain;
    } else if (fields[2] == "test") {
      a.split = Split::kTest;
    } else {
      throw DataError(Location(anchor_file, line_no) + ": unknown split '" +
                      fields[2] + "'");
    }
    a.planted_right = a.right;
    a.mask = CleanMask(num_m);
    pair.anchors.push_back(std::move(a));
  }

  const auto mask_file = dir / "masks.json";
  if (std::filesystem::exists(mask_file)) {
    try {
      const json masks = json::parse(OpenInput(mask_file));
      const json& list = masks.at("anchors");
      if (list.size() != pair.anchors.size()) {
        throw DataError("masks.json: anchor count differs from anchors.tsv");
      }
      for (std::size_t k = 0; k < list.size(); ++k) {
        AnchorPair& a = pair.anchors[k];
        a.planted_right = list[k].at("planted_right").get<int>();
        a.mask.ee = list[k].at("ee").get<bool>();
        a.mask.ea_left = list[k].at("ea_left").get<std::vector<std::uint8_t>>();
        a.mask.ea_right =
            list[k].at("ea_right").get<std::vector<std::uint8_t>>();
        a.mask.aa = list[k].at("aa").get<std::vector<std::uint8_t>>();
      }
      for (const json& ev : masks.at("log")) {
        pair.corruption_log.push_back(EventFromJson(ev, pair));
        const CorruptionEvent& e = pair.corruption_log.back();
        if (e.kind == CorruptionEvent::Kind::kEntityAttribute) {
          pair.side(e.side).entities.at(e.entity).ea_indicator.at(e.modality) = 0;
        }
      }
    } catch (const json::exception& e) {
      throw DataError(std::string("masks.json: ") + e.what());
    }
  }
  Validate(pair);
  return pair;
}

}  // namespace dnc
