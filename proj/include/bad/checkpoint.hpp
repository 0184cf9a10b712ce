// Copyright 2026 The BAD Lab Authors.
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

#pragma once

// Binary checkpoints: 8-byte magic, little-endian u64 header length, a JSON
// header (format version, kind, tensor names and shapes, configuration and
// its hash), then every tensor as little-endian float32 in header order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bad/error.hpp"
#include "bad/nn.hpp"
#include "bad/rng.hpp"

namespace bad::ckpt {

inline constexpr std::array<char, 8> kMagic{'B', 'A', 'D', 'C', 'K', 'P', 'T', '\n'};
inline constexpr int kFormatVersion = 1;

// Hash of the canonical (sorted-key, compact) JSON text.
inline std::uint64_t config_hash(const nlohmann::json& config) { return fnv1a64(config.dump()); }

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Checkpoint {
  std::string kind;  // "hanabi" or "matrix"
  nlohmann::json config;
  nlohmann::json extra;  // free-form training metadata
  nn::Mlp<float> net;
};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c == EOF) throw CheckpointError("truncated checkpoint header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const auto& params = ck.net.params();
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = ck.kind;
  header["config"] = ck.config;
  header["config_hash"] = hash_hex(config_hash(ck.config));
  header["extra"] = ck.extra;
  header["network"] = {{"inputs", ck.net.shape().inputs},
                       {"hidden", ck.net.shape().hidden},
                       {"actions", ck.net.shape().actions}};
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < params.size(); ++i)
    tensors.push_back({{"name", params.names[i]},
                       {"shape", {params.tensors[i].rows(), params.tensors[i].cols()}}});
  header["tensors"] = tensors;
  const std::string text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path);
    out.write(kMagic.data(), kMagic.size());
    detail::put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : params.tensors) {
      // Row-major order, independent of Eigen's storage.
      for (long r = 0; r < t.rows(); ++r)
        for (long c = 0; c < t.cols(); ++c) {
          const std::uint32_t bits = std::bit_cast<std::uint32_t>(t(r, c));
          for (int k = 0; k < 4; ++k) out.put(static_cast<char>((bits >> (8 * k)) & 0xff));
        }
    }
    if (!out) throw CheckpointError("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint not found: " + path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw CheckpointError("not a checkpoint file: " + path);
  const std::uint64_t len = detail::get_u64(in);
  if (len > (1u << 26)) throw CheckpointError("checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (header.value("format_version", -1) != kFormatVersion)
    throw CheckpointError("unsupported checkpoint format version");

  Checkpoint ck;
  try {
    ck.kind = header.at("kind").get<std::string>();
    ck.config = header.at("config");
    ck.extra = header.value("extra", nlohmann::json::object());
    if (header.at("config_hash").get<std::string>() != hash_hex(config_hash(ck.config)))
      throw CheckpointError("checkpoint configuration hash mismatch");
    nn::MlpShape shape;
    shape.inputs = header.at("network").at("inputs").get<int>();
    shape.hidden = header.at("network").at("hidden").get<std::vector<int>>();
    shape.actions = header.at("network").at("actions").get<int>();
    ck.net = nn::Mlp<float>(shape, 0);
    auto& params = ck.net.params();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != params.size()) throw CheckpointError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& t = params.tensors[i];
      if (tensors[i].at("name").get<std::string>() != params.names[i] ||
          tensors[i].at("shape")[0].get<long>() != t.rows() || tensors[i].at("shape")[1].get<long>() != t.cols())
        throw CheckpointError("checkpoint tensor layout mismatch at " + params.names[i]);
      for (long r = 0; r < t.rows(); ++r)
        for (long c = 0; c < t.cols(); ++c) {
          std::array<unsigned char, 4> b{};
          in.read(reinterpret_cast<char*>(b.data()), 4);
          if (!in) throw CheckpointError("truncated checkpoint tensor data");
          const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                                     (static_cast<std::uint32_t>(b[2]) << 16) |
                                     (static_cast<std::uint32_t>(b[3]) << 24);
          t(r, c) = std::bit_cast<float>(bits);
        }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (in.peek() != EOF) throw CheckpointError("trailing bytes after checkpoint tensors");
  return ck;
}

}  // namespace bad::ckpt
