//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "despec/autodiff/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace despec::ad {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'P', 'E', 'C', 'N', 'T', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor<float>* NamedTensors::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::string serialize_tensors(const NamedTensors& contents) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  std::string meta;
  for (const auto& [k, v] : contents.metadata) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw UserError("checkpoint metadata entries may not contain newlines or '=' in keys: " + k);
    }
    meta += k + "=" + v + "\n";
  }
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  put_u32(out, static_cast<std::uint32_t>(contents.tensors.size()));
  for (const auto& [name, t] : contents.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const Shape s = t.shape();
    put_u32(out, 4);
    for (int d : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : t.data()) put_f32(out, f);
  }
  return out;
}

NamedTensors deserialize_tensors(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw IoError("not a despec checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  NamedTensors result;
  std::istringstream meta(r.str(r.u32()));
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed checkpoint metadata line: " + line);
    result.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank != 4) throw IoError("tensor " + name + " has unsupported rank " + std::to_string(rank));
    Shape s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    std::vector<float> values(s.numel());
    for (auto& v : values) v = r.f32();
    result.tensors.emplace_back(std::move(name), Tensor<float>(s, std::move(values)));
  }
  if (!r.done()) throw IoError("trailing bytes after checkpoint payload");
  return result;
}

void save_tensors(const std::filesystem::path& path, const NamedTensors& contents) {
  const std::string bytes = serialize_tensors(contents);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_tensors(ss.str());
}

}  // namespace despec::ad
