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

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "dnc/errors.h"

namespace dnc {

EncoderBank EncoderBank::Initialize(const std::vector<ModalitySpec>& modalities,
                                    int embed_dim, std::uint64_t seed) {
  if (embed_dim < 1) throw ConfigError("embedding dimension must be positive");
  EncoderBank bank;
  bank.embed_dim = embed_dim;
  bank.modalities = modalities;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const ModalitySpec& m : modalities) {
    AffineMap map;
    map.weight.resize(m.dim, embed_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m.dim));
    for (Eigen::Index k = 0; k < map.weight.size(); ++k) {
      map.weight.data()[k] = scale * gauss(rng);
    }
    map.bias = Vector::Zero(embed_dim);
    bank.maps.push_back(std::move(map));
  }
  return bank;
}

EncoderBank EncoderBank::ZerosLike(const EncoderBank& bank) {
  EncoderBank out = bank;
  for (AffineMap& map : out.maps) {
    map.weight.setZero();
    map.bias.setZero();
  }
  return out;
}

Eigen::Index EncoderBank::num_parameters() const {
  Eigen::Index n = 0;
  for (const AffineMap& map : maps) n += map.weight.size() + map.bias.size();
  return n;
}

Vector EncoderBank::Flatten() const {
  Vector flat(num_parameters());
  Eigen::Index offset = 0;
  for (const AffineMap& map : maps) {
    flat.segment(offset, map.weight.size()) =
        Eigen::Map<const Vector>(map.weight.data(), map.weight.size());
    offset += map.weight.size();
    flat.segment(offset, map.bias.size()) = map.bias;
    offset += map.bias.size();
  }
  return flat;
}

void EncoderBank::Assign(const Vector& flat) {
  Eigen::Index offset = 0;
  for (AffineMap& map : maps) {
    Eigen::Map<Vector>(map.weight.data(), map.weight.size()) =
        flat.segment(offset, map.weight.size());
    offset += map.weight.size();
    map.bias = flat.segment(offset, map.bias.size());
    offset += map.bias.size();
  }
}

EncoderInputs PrepareInputs(const TrainView& view) {
  EncoderInputs inputs;
  for (Side s : {Side::kLeft, Side::kRight}) {
    SideInputs& out = s == Side::kLeft ? inputs.left : inputs.right;
    const int n = view.num_entities(s);
    std::vector<std::set<int>> neighbours(n);
    for (const Triple& t : view.triples(s)) {
      if (t.head == t.tail) continue;
      neighbours[t.head].insert(t.tail);
      neighbours[t.tail].insert(t.head);
    }
    for (int m = 0; m < view.num_modalities(); ++m) {
      Matrix raw = Matrix::Zero(n, view.attribute_dim(m));
      std::vector<std::uint8_t> present(n);
      for (int i = 0; i < n; ++i) {
        std::span<const float> row = view.attribute(s, i, m);
        if (row.empty()) continue;
        present[i] = 1;
        for (std::size_t c = 0; c < row.size(); ++c) raw(i, c) = row[c];
      }
      if (view.modalities()[m].kind() == ModalityKind::kStructure) {
        Matrix agg = Matrix::Zero(n, raw.cols());
        for (int i = 0; i < n; ++i) {
          if (!present[i]) continue;
          int count = 1;
          agg.row(i) = raw.row(i);
          for (int j : neighbours[i]) {
            if (!present[j]) continue;
            agg.row(i) += raw.row(j);
            ++count;
          }
          agg.row(i) /= count;
        }
        raw = std::move(agg);
      }
      out.features.push_back(std::move(raw));
      out.present.push_back(std::move(present));
    }
  }
  return inputs;
}

EmbeddingTable Encode(const EncoderBank& bank, const EncoderInputs& inputs) {
  EmbeddingTable table;
  for (Side s : {Side::kLeft, Side::kRight}) {
    const SideInputs& in = inputs.side(s);
    SideEmbeddings& out = s == Side::kLeft ? table.left : table.right;
    if (static_cast<int>(in.features.size()) != bank.num_modalities()) {
      throw DataError("encoder bank and inputs disagree on modality count");
    }
    for (int m = 0; m < bank.num_modalities(); ++m) {
      const AffineMap& map = bank.maps[m];
      const Matrix& x = in.features[m];
      if (x.cols() != map.weight.rows()) {
        throw DataError("modality '" + bank.modalities[m].name +
                        "': feature dim " + std::to_string(x.cols()) +
                        " does not match encoder input dim " +
                        std::to_string(map.weight.rows()));
      }
      Matrix h = x * map.weight;
      h.rowwise() += map.bias.transpose();
      Vector norms = h.rowwise().norm();
      std::vector<std::uint8_t> present = in.present[m];
      for (Eigen::Index i = 0; i < h.rows(); ++i) {
        if (!present[i] || norms(i) == 0.0) {
          h.row(i).setZero();
          norms(i) = 0.0;
          present[i] = 0;
        } else {
          h.row(i) /= norms(i);
        }
      }
      out.modal.push_back(std::move(h));
      out.norms.push_back(std::move(norms));
      out.present.push_back(std::move(present));
    }
  }
  return table;
}

void EncodeBackward(const EncoderBank& bank, const EncoderInputs& inputs,
                    const EmbeddingTable& table,
                    const std::vector<Matrix>& grad_left,
                    const std::vector<Matrix>& grad_right, EncoderBank* grad) {
  for (Side s : {Side::kLeft, Side::kRight}) {
    const SideInputs& in = inputs.side(s);
    const SideEmbeddings& emb = table.side(s);
    const std::vector<Matrix>& g = s == Side::kLeft ? grad_left : grad_right;
    for (int m = 0; m < bank.num_modalities(); ++m) {
      const Matrix& z = emb.modal[m];
      // d/dh of h/|h| applied to g: (g - z (z.g)) / |h|.
      Matrix dh = g[m];
      for (Eigen::Index i = 0; i < dh.rows(); ++i) {
        if (emb.norms[m](i) == 0.0) {
          dh.row(i).setZero();
          continue;
        }
        const double proj = z.row(i).dot(dh.row(i));
        dh.row(i) = (dh.row(i) - proj * z.row(i)) / emb.norms[m](i);
      }
      grad->maps[m].weight.noalias() += in.features[m].transpose() * dh;
      grad->maps[m].bias += dh.colwise().sum().transpose();
    }
  }
}

Matrix Similarity(const Matrix& left, const Matrix& right) {
  if (left.cols() != right.cols()) {
    throw std::invalid_argument("similarity: embedding widths differ");
  }
  return left * right.transpose();
}

namespace {

using json = nlohmann::json;

void WriteU64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t ReadU64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw DataError("checkpoint: truncated header length");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return v;
}

void WriteF32(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  unsigned char bytes[4];
  for (int k = 0; k < 4; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

void SaveCheckpoint(const EncoderBank& bank, const std::filesystem::path& file) {
  json header;
  header["format"] = "f32le";
  header["embed_dim"] = bank.embed_dim;
  header["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (int m = 0; m < bank.num_modalities(); ++m) {
    const AffineMap& map = bank.maps[m];
    const std::string& name = bank.modalities[m].name;
    header["tensors"].push_back(
        {{"name", name + ".weight"},
         {"shape", {map.weight.rows(), map.weight.cols()}},
         {"offset", offset}});
    offset += map.weight.size() * 4;
    header["tensors"].push_back({{"name", name + ".bias"},
                                 {"shape", {map.bias.size()}},
                                 {"offset", offset}});
    offset += map.bias.size() * 4;
  }
  const std::string text = header.dump();
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(file.string() + ": cannot open for writing");
  WriteU64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const AffineMap& map : bank.maps) {
    for (Eigen::Index k = 0; k < map.weight.size(); ++k) {
      WriteF32(out, map.weight.data()[k]);
    }
    for (Eigen::Index k = 0; k < map.bias.size(); ++k) WriteF32(out, map.bias(k));
  }
}

EncoderBank LoadCheckpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError(file.filename().string() + ": missing file");
  const std::uint64_t length = ReadU64(in);
  if (length > (1u << 26)) throw DataError("checkpoint: implausible header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw DataError("checkpoint: truncated header");
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  auto read_f32 = [&](std::uint64_t byte_offset) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) {
      bits |= static_cast<std::uint32_t>(payload[byte_offset + k]) << (8 * k);
    }
    return static_cast<double>(std::bit_cast<float>(bits));
  };
  EncoderBank bank;
  try {
    const json header = json::parse(text);
    if (header.value("format", "") != "f32le") {
      throw DataError("checkpoint: unsupported format");
    }
    bank.embed_dim = header.at("embed_dim").get<int>();
    const json& tensors = header.at("tensors");
    if (tensors.size() % 2 != 0) throw DataError("checkpoint: odd tensor count");
    for (std::size_t t = 0; t < tensors.size(); t += 2) {
      const json& w = tensors[t];
      const json& b = tensors[t + 1];
      std::string name = w.at("name").get<std::string>();
      const std::string suffix = ".weight";
      if (name.size() <= suffix.size() ||
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
        throw DataError("checkpoint: expected a weight tensor, got " + name);
      }
      name.resize(name.size() - suffix.size());
      const auto rows = w.at("shape")[0].get<Eigen::Index>();
      const auto cols = w.at("shape")[1].get<Eigen::Index>();
      const auto bias_len = b.at("shape")[0].get<Eigen::Index>();
      if (cols != bank.embed_dim || bias_len != bank.embed_dim) {
        throw DataError("checkpoint: tensor " + name + " has wrong width");
      }
      const auto w_off = w.at("offset").get<std::uint64_t>();
      const auto b_off = b.at("offset").get<std::uint64_t>();
      if (w_off + rows * cols * 4 > payload.size() ||
          b_off + bias_len * 4 > payload.size()) {
        throw DataError("checkpoint: payload truncated");
      }
      AffineMap map;
      map.weight.resize(rows, cols);
      for (Eigen::Index k = 0; k < map.weight.size(); ++k) {
        map.weight.data()[k] = read_f32(w_off + 4 * k);
      }
      map.bias.resize(bias_len);
      for (Eigen::Index k = 0; k < bias_len; ++k) map.bias(k) = read_f32(b_off + 4 * k);
      bank.modalities.push_back({name, static_cast<int>(rows)});
      bank.maps.push_back(std::move(map));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  return bank;
}

}  // namespace dnc
