// Copyright 2026 The cfm-workbench Authors
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

#include "cfm/model/checkpoint_io.hpp"

#include <cstring>
#include <fstream>

#include "cfm/data/dataset.hpp"

namespace cfm::model {

namespace {

constexpr uint32_t kVersion = 1;
constexpr char kMagic[4] = {'C', 'F', 'M', 'C'};

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}
void put_f32(std::vector<uint8_t>& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

class Reader {
 public:
  Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  uint8_t u8() { return *take(1); }
  uint16_t u16() {
    const uint8_t* b = take(2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t u32() {
    const uint8_t* b = take(4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  const uint8_t* take(size_t n) {
    if (pos_ + n > n_) {
      throw data::IoError(data::IoError::Kind::kTruncated,
                          "unexpected end of checkpoint data");
    }
    const uint8_t* r = p_ + pos_;
    pos_ += n;
    return r;
  }
  size_t remaining() const { return n_ - pos_; }

 private:
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

nlohmann::json describe(const Checkpoint& ck) {
  nlohmann::json j;
  j["format"] = "CFMC";
  j["env"] = sim::to_string(ck.specs.env);
  j["image_size"] = ck.specs.image_size;
  j["action_dim"] = ck.specs.action_dim;
  j["latent_dim"] = ck.specs.latent_dim;
  j["encoder"] = ck.specs.enc.to_json();
  j["forward"] = ck.specs.fm.to_json();
  j["has_decoder"] = ck.specs.has_decoder;
  j["has_inverse"] = ck.specs.has_inverse;
  j["objective"] = ck.objective;
  j["similarity"] = nn::to_string(ck.similarity);
  j["include_positive"] = ck.include_positive;
  j["train_config"] = nlohmann::json::parse(ck.train_config_json);
  return j;
}

}  // namespace

std::vector<uint8_t> checkpoint_to_bytes(const Checkpoint& ck) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  std::string desc = describe(ck).dump();
  put_u32(out, static_cast<uint32_t>(desc.size()));
  out.insert(out.end(), desc.begin(), desc.end());
  put_u32(out, static_cast<uint32_t>(ck.params.count()));
  for (const auto& e : ck.params.entries()) {
    put_u16(out, static_cast<uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.push_back(static_cast<uint8_t>(e.value.shape.size()));
    for (int d : e.value.shape) put_u32(out, static_cast<uint32_t>(d));
    for (float v : e.value.data) put_f32(out, v);
  }
  return out;
}

Checkpoint checkpoint_from_bytes(const std::vector<uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size());
  const uint8_t* magic = r.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw data::IoError(data::IoError::Kind::kBadMagic,
                        "bad magic: not a CFMC file");
  }
  uint32_t version = r.u32();
  if (version != kVersion) {
    throw data::IoError(data::IoError::Kind::kBadVersion,
                        "unsupported CFMC version " + std::to_string(version));
  }
  uint32_t desc_len = r.u32();
  const uint8_t* desc_bytes = r.take(desc_len);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(desc_bytes, desc_bytes + desc_len);
  } catch (const nlohmann::json::exception& e) {
    throw data::IoError(data::IoError::Kind::kBadValue,
                        std::string("bad checkpoint descriptor: ") + e.what());
  }
  Checkpoint ck;
  try {
    ck.specs.env = sim::env_from_string(j.at("env").get<std::string>());
    ck.specs.image_size = j.at("image_size").get<int>();
    ck.specs.action_dim = j.at("action_dim").get<int>();
    ck.specs.latent_dim = j.at("latent_dim").get<int>();
    ck.specs.enc = EncoderSpec::from_json(j.at("encoder"));
    ck.specs.fm = ForwardModelSpec::from_json(j.at("forward"));
    ck.specs.has_decoder = j.at("has_decoder").get<bool>();
    ck.specs.has_inverse = j.at("has_inverse").get<bool>();
    ck.objective = j.at("objective").get<std::string>();
    ck.similarity = nn::similarity_from_string(j.at("similarity").get<std::string>());
    ck.include_positive = j.at("include_positive").get<bool>();
    ck.train_config_json = j.at("train_config").dump();
  } catch (const nlohmann::json::exception& e) {
    throw data::IoError(data::IoError::Kind::kBadValue,
                        std::string("bad checkpoint descriptor: ") + e.what());
  }
  uint32_t n_tensors = r.u32();
  for (uint32_t t = 0; t < n_tensors; ++t) {
    uint16_t name_len = r.u16();
    const uint8_t* nm = r.take(name_len);
    std::string name(nm, nm + name_len);
    uint8_t ndim = r.u8();
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    nn::Tensor<float> tensor(shape);
    for (auto& v : tensor.data) v = r.f32();
    ck.params.add(name, std::move(tensor));
  }
  if (r.remaining() != 0) {
    throw data::IoError(data::IoError::Kind::kBadValue,
                        "trailing bytes after checkpoint payload");
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  auto bytes = checkpoint_to_bytes(ck);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

}  // namespace cfm::model
