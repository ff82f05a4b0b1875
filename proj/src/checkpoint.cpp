// Copyright 2026 The FOLNet Authors.
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

#include "folnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace folnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr const char* kMagic = "FOLNETCKPT 1";
constexpr const char* kParamPrefix = "param/";

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("checkpoint " + path + ": truncated tensor record");
  }
  return v;
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw std::out_of_range("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    os << kMagic << '\n';
    for (const auto& [k, v] : ckpt.fields) {
      if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
          v.find('\n') != std::string::npos) {
        throw std::invalid_argument("checkpoint field '" + k + "' is not a single key=value line");
      }
      os << k << '=' << v << '\n';
    }
    os << "tensors=" << ckpt.tensors.size() << "\nend_header\n";
    for (const auto& [name, t] : ckpt.tensors) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
      for (std::size_t d : t.shape()) put<std::uint64_t>(os, d);
      auto v = t.values();
      os.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!os.flush()) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  std::string line;
  if (!std::getline(is, line) || line != kMagic) {
    throw std::runtime_error("checkpoint " + path + ": bad magic or version");
  }
  Checkpoint ck;
  std::size_t n = 0;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint " + path + ": bad header line");
    std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "tensors") {
      n = std::stoul(v);
    } else {
      ck.fields[k] = v;
    }
  }
  if (!ended) throw std::runtime_error("checkpoint " + path + ": header not terminated");
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = get<std::uint32_t>(is, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw std::runtime_error("checkpoint " + path + ": truncated name");
    const auto rank = get<std::uint32_t>(is, path);
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = get<std::uint64_t>(is, path);
      numel *= d;
    }
    std::vector<double> vals(numel);
    if (!is.read(reinterpret_cast<char*>(vals.data()),
                 static_cast<std::streamsize>(numel * sizeof(double)))) {
      throw std::runtime_error("checkpoint " + path + ": truncated data for " + name);
    }
    ck.tensors.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(vals)));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint " + path + ": trailing bytes");
  }
  return ck;
}

Checkpoint model_checkpoint(const model::ModelConfig& config, const model::ModelParams& params) {
  Checkpoint ck;
  ck.fields = config.to_fields();
  for (auto& [name, t] : params.named()) ck.tensors.emplace_back(kParamPrefix + name, t.clone());
  return ck;
}

std::pair<model::ModelConfig, model::ModelParams> load_model(const Checkpoint& ckpt) {
  auto config = model::ModelConfig::from_fields(ckpt.fields);
  RngState rng(0);
  auto params = model::init_params(config, rng);
  std::size_t expected = 0;
  params.visit([&](const std::string& name, Tensor& t) {
    ++expected;
    const auto& src = ckpt.tensor(kParamPrefix + name);
    if (src.shape() != t.shape()) {
      throw ShapeError("checkpoint tensor " + name + " has shape " + shape_str(src.shape()) +
                       ", model expects " + shape_str(t.shape()));
    }
    auto dst = t.mutable_values();
    std::copy(src.values().begin(), src.values().end(), dst.begin());
  });
  std::size_t stored = 0;
  for (const auto& [n, t] : ckpt.tensors) stored += n.rfind(kParamPrefix, 0) == 0;
  if (stored != expected) {
    throw std::runtime_error("checkpoint holds " + std::to_string(stored) +
                             " parameters, model has " + std::to_string(expected));
  }
  return {config, params};
}

}  // namespace folnet
