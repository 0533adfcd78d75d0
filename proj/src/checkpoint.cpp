/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sasr/checkpoint.hpp"

#include "sasr/io.hpp"

#include <cstring>

namespace sasr::checkpoint {

namespace {

constexpr char kMagic[4] = {'N', 'T', '1', 'D'};

std::string kind_name(NetworkKind k) {
  switch (k) {
    case NetworkKind::generator: return "generator";
    case NetworkKind::discriminator: return "discriminator";
    case NetworkKind::feature_extractor: return "feature_extractor";
  }
  return "?";
}

NetworkKind parse_kind(const std::string& s) {
  if (s == "generator") return NetworkKind::generator;
  if (s == "discriminator") return NetworkKind::discriminator;
  if (s == "feature_extractor") return NetworkKind::feature_extractor;
  throw io::FormatError("model: unknown network kind " + s);
}

Image as_block(const Matrix& m) { return Image(m.rows(), m.cols(), Eigen::Map<const Matrix>(m.data(), 1, m.size())); }

}  // namespace

std::string encode(const std::vector<const NetworkParams*>& networks, const nlohmann::json& extra) {
  nlohmann::json manifest;
  manifest["format"] = "nt1d";
  manifest["version"] = 1;
  manifest["extra"] = extra;
  std::string blocks;
  for (const NetworkParams* net : networks) {
    nlohmann::json n;
    n["kind"] = kind_name(net->kind);
    n["channels"] = net->channels;
    n["frames"] = net->frames;
    n["height"] = net->height;
    n["width"] = net->width;
    n["seed"] = net->seed;
    for (const Layer& l : net->layers) {
      n["layers"].push_back({{"name", l.name},
                             {"weight", {l.weight.rows(), l.weight.cols()}},
                             {"bias", {l.bias.rows(), l.bias.cols()}},
                             {"stride", l.stride}});
      blocks += io::encode_nt1(as_block(l.weight));
      blocks += io::encode_nt1(as_block(l.bias));
    }
    manifest["networks"].push_back(std::move(n));
  }
  const std::string header = manifest.dump();
  std::string out(kMagic, 4);
  const auto len = static_cast<std::uint32_t>(header.size());
  out.append(reinterpret_cast<const char*>(&len), 4);
  out += header;
  out += blocks;
  return out;
}

Decoded decode(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw io::FormatError("model: bad magic");
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 4, 4);
  if (bytes.size() < 8 + std::size_t(len)) throw io::FormatError("model: truncated manifest");
  Decoded d;
  try {
    d.manifest = nlohmann::json::parse(bytes.substr(8, len));
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(std::string("model: manifest: ") + e.what());
  }
  std::size_t offset = 8 + len;
  auto next_block = [&](Index rows, Index cols) {
    const std::size_t size = 16 + static_cast<std::size_t>(rows * cols) * 8;
    if (offset + size > bytes.size()) throw io::FormatError("model: truncated tensor block");
    const Image img = io::decode_nt1(bytes.substr(offset, size));
    offset += size;
    if (img.channels() != 1 || img.height() != rows || img.width() != cols)
      throw io::FormatError("model: tensor block does not match manifest");
    return Matrix(img.channel(0));
  };
  for (const auto& n : d.manifest.at("networks")) {
    NetworkParams p;
    p.kind = parse_kind(n.at("kind").get<std::string>());
    p.channels = n.at("channels").get<Index>();
    p.frames = n.at("frames").get<Index>();
    p.height = n.at("height").get<Index>();
    p.width = n.at("width").get<Index>();
    p.seed = n.at("seed").get<std::uint64_t>();
    for (const auto& l : n.at("layers")) {
      const Index wr = l.at("weight")[0].get<Index>(), wc = l.at("weight")[1].get<Index>();
      const Index br = l.at("bias")[0].get<Index>();
      Layer layer(l.at("name").get<std::string>(), wr, wc, l.at("stride").get<Index>());
      layer.weight = next_block(wr, wc);
      layer.bias = next_block(br, 1);
      p.layers.push_back(std::move(layer));
    }
    d.networks.push_back(std::move(p));
  }
  if (offset != bytes.size()) throw io::FormatError("model: trailing bytes");
  return d;
}

nlohmann::json history_to_json(const History& h) {
  nlohmann::json j;
  j["train"] = nlohmann::json::array();
  for (const auto& e : h.train) {
    j["train"].push_back({{"iteration", e.iteration},
                          {"lr", e.lr},
                          {"adversarial", e.adversarial},
                          {"d_loss", e.d_loss},
                          {"gan_term", e.g.gan_term},
                          {"perceptual_term", e.g.perceptual_term},
                          {"pixel_uniform_term", e.g.pixel_uniform_term},
                          {"pixel_sa_term", e.g.pixel_sa_term},
                          {"total", e.g.total}});
  }
  j["validation"] = nlohmann::json::array();
  for (const auto& v : h.validation) j["validation"].push_back({{"iteration", v.iteration}, {"loss", v.loss}});
  j["best_iteration"] = h.best_iteration ? nlohmann::json(*h.best_iteration) : nlohmann::json(nullptr);
  return j;
}

}  // namespace sasr::checkpoint
