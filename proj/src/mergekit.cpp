// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/mergekit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "migkit/error.hpp"
#include "migkit/kernels/kernels.hpp"

namespace migkit {

static_assert(std::endian::native == std::endian::little,
              "archive payloads are little-endian and read in place");

namespace {

constexpr const char* kMetaKey = "__metadata__";
// Header sizes above this are treated as corruption.
constexpr std::uint64_t kMaxHeader = 100ull << 20;

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::f32;
  if (s == "f16") return DType::f16;
  throw ValidationError("unsupported dtype '" + s + "'");
}

template <typename T>
std::vector<T> load_values(const TensorArchive& a, const std::string& name, DType want) {
  const auto it = a.tensors.find(name);
  if (it == a.tensors.end()) throw ValidationError("no tensor named '" + name + "'");
  if (it->second.dtype != want) throw ValidationError("tensor '" + name + "' has another dtype");
  std::vector<T> v(it->second.length / sizeof(T));
  std::memcpy(v.data(), a.payload.data() + it->second.offset, it->second.length);
  return v;
}

void add_tensor(TensorArchive& a, const std::string& name, DType dtype,
                std::vector<std::uint64_t> shape, const void* data, std::size_t count) {
  if (a.tensors.contains(name)) throw ValidationError("duplicate tensor '" + name + "'");
  TensorInfo info{dtype, std::move(shape), a.payload.size(), count * dtype_size(dtype)};
  if (info.elements() != count) {
    throw ValidationError("tensor '" + name + "': shape does not match value count");
  }
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  a.payload.insert(a.payload.end(), bytes, bytes + info.length);
  a.tensors.emplace(name, std::move(info));
}

}  // namespace

std::string_view to_string(DType d) { return d == DType::f32 ? "f32" : "f16"; }

std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 2; }

std::uint64_t TensorInfo::elements() const {
  std::uint64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

void TensorArchive::add_f32(const std::string& name, std::vector<std::uint64_t> shape,
                            std::span<const float> values) {
  add_tensor(*this, name, DType::f32, std::move(shape), values.data(), values.size());
}

void TensorArchive::add_f16(const std::string& name, std::vector<std::uint64_t> shape,
                            std::span<const std::uint16_t> values) {
  add_tensor(*this, name, DType::f16, std::move(shape), values.data(), values.size());
}

std::vector<float> TensorArchive::f32(const std::string& name) const {
  return load_values<float>(*this, name, DType::f32);
}

std::vector<std::uint16_t> TensorArchive::f16(const std::string& name) const {
  return load_values<std::uint16_t>(*this, name, DType::f16);
}

std::vector<std::string> TensorArchive::names_by_offset() const {
  std::vector<std::string> names;
  for (const auto& [n, _] : tensors) names.push_back(n);
  std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    return tensors.at(a).offset < tensors.at(b).offset;
  });
  return names;
}

void validate_archive(const TensorArchive& a) {
  std::uint64_t expect = 0;
  for (const auto& name : a.names_by_offset()) {
    const TensorInfo& t = a.tensors.at(name);
    if (t.length != t.elements() * dtype_size(t.dtype)) {
      throw ValidationError("tensor '" + name + "': length " + std::to_string(t.length) +
                            " does not match its shape and dtype");
    }
    if (t.offset != expect) {
      throw ValidationError("tensor '" + name + "' at offset " + std::to_string(t.offset) +
                            (t.offset < expect ? " overlaps" : " leaves a gap after") +
                            " the previous tensor");
    }
    expect += t.length;
  }
  if (expect != a.payload.size()) {
    throw ValidationError("tensors cover " + std::to_string(expect) + " of " +
                          std::to_string(a.payload.size()) + " payload bytes");
  }
}

std::vector<std::uint8_t> encode_archive(const TensorArchive& a) {
  validate_archive(a);
  Json header = Json::object();
  for (const auto& [name, t] : a.tensors) {
    header[name] = {{"dtype", std::string(to_string(t.dtype))},
                    {"shape", t.shape},
                    {"offset", t.offset},
                    {"length", t.length}};
  }
  header[kMetaKey] = a.metadata;
  const std::string h = header.dump();
  std::vector<std::uint8_t> out(8 + h.size() + a.payload.size());
  const std::uint64_t n = h.size();
  std::memcpy(out.data(), &n, 8);
  std::memcpy(out.data() + 8, h.data(), h.size());
  if (!a.payload.empty()) std::memcpy(out.data() + 8 + h.size(), a.payload.data(), a.payload.size());
  return out;
}

TensorArchive decode_archive(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw ValidationError("archive shorter than its 8-byte prefix");
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data(), 8);
  if (n > kMaxHeader || n > bytes.size() - 8) throw ValidationError("archive header length is corrupt");
  const Json header = Json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n),
                                  nullptr, false);
  if (header.is_discarded() || !header.is_object()) {
    throw ValidationError("archive header is not a JSON object");
  }
  TensorArchive a;
  try {
    for (const auto& [name, tj] : header.items()) {
      if (name == kMetaKey) {
        a.metadata = tj;
        continue;
      }
      TensorInfo t;
      t.dtype = parse_dtype(tj.at("dtype").get<std::string>());
      t.shape = tj.at("shape").get<std::vector<std::uint64_t>>();
      t.offset = tj.at("offset").get<std::uint64_t>();
      t.length = tj.at("length").get<std::uint64_t>();
      a.tensors.emplace(name, std::move(t));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("archive header: ") + e.what());
  }
  a.payload.assign(bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n), bytes.end());
  validate_archive(a);
  return a;
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open archive " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_archive(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_archive(const std::filesystem::path& path, const TensorArchive& a) {
  const auto bytes = encode_archive(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write archive " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to " + path.string() + " failed");
}

namespace {

void check_compatible(const TensorArchive& ref, const TensorArchive& other, std::size_t which) {
  for (const auto& [name, t] : ref.tensors) {
    const auto it = other.tensors.find(name);
    if (it == other.tensors.end()) {
      throw ValidationError("archive " + std::to_string(which) + " lacks tensor '" + name + "'");
    }
    if (it->second.dtype != t.dtype) {
      throw ValidationError("tensor '" + name + "': dtype differs in archive " +
                            std::to_string(which));
    }
    if (it->second.shape != t.shape) {
      throw ValidationError("tensor '" + name + "': shape differs in archive " +
                            std::to_string(which));
    }
  }
  for (const auto& [name, _] : other.tensors) {
    if (!ref.tensors.contains(name)) {
      throw ValidationError("archive " + std::to_string(which) + " has extra tensor '" + name + "'");
    }
  }
}

}  // namespace

TensorArchive merge(std::span<const TensorArchive> archives,
                    std::optional<std::vector<double>> weights) {
  if (archives.size() < 2) throw ValidationError("merge needs at least two archives");
  std::vector<double> w = weights.value_or(
      std::vector<double>(archives.size(), 1.0 / static_cast<double>(archives.size())));
  if (w.size() != archives.size()) throw ValidationError("one weight per archive is required");
  double sum = 0;
  for (double x : w) {
    if (!(x >= 0) || !std::isfinite(x)) throw ValidationError("weights must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("weights must sum to 1");
  for (std::size_t i = 0; i < archives.size(); ++i) validate_archive(archives[i]);
  for (std::size_t i = 1; i < archives.size(); ++i) check_compatible(archives[0], archives[i], i);

  const auto& k = kernels::active();
  TensorArchive out;
  out.metadata = archives[0].metadata;
  out.tensors = archives[0].tensors;
  out.payload.resize(archives[0].payload.size());
  std::vector<double> acc;
  std::vector<float> f32buf;
  std::vector<std::uint16_t> f16buf;
  for (const auto& [name, t] : archives[0].tensors) {
    const std::size_t n = t.elements();
    acc.assign(n, -0.0);  // additive identity, keeps -0 through a self-merge
    for (std::size_t i = 0; i < archives.size(); ++i) {
      const TensorInfo& src = archives[i].tensors.at(name);
      const std::uint8_t* bytes = archives[i].payload.data() + src.offset;
      if (t.dtype == DType::f32) {
        f32buf.resize(n);
        std::memcpy(f32buf.data(), bytes, src.length);
        k.axpy_f32(w[i], f32buf.data(), acc.data(), n);
      } else {
        f16buf.resize(n);
        std::memcpy(f16buf.data(), bytes, src.length);
        k.axpy_f16(w[i], f16buf.data(), acc.data(), n);
      }
    }
    std::uint8_t* dst = out.payload.data() + t.offset;
    if (t.dtype == DType::f32) {
      f32buf.resize(n);
      k.narrow_f32(acc.data(), f32buf.data(), n);
      std::memcpy(dst, f32buf.data(), t.length);
    } else {
      f16buf.resize(n);
      k.narrow_f16(acc.data(), f16buf.data(), n);
      std::memcpy(dst, f16buf.data(), t.length);
    }
  }
  return out;
}

Json DiffReport::to_json() const {
  Json t = Json::array();
  for (const auto& d : tensors) t.push_back({{"name", d.name}, {"max_abs", d.max_abs}, {"l2", d.l2}});
  return Json{{"tensors", t}, {"max_abs", max_abs}};
}

DiffReport diff(const TensorArchive& a, const TensorArchive& b) {
  validate_archive(a);
  validate_archive(b);
  check_compatible(a, b, 1);
  const auto& k = kernels::active();
  DiffReport r;
  for (const auto& [name, t] : a.tensors) {
    const std::size_t n = t.elements();
    double max_abs = 0;
    double sum_sq = 0;
    if (t.dtype == DType::f32) {
      const auto x = a.f32(name);
      const auto y = b.f32(name);
      k.diff_f32(x.data(), y.data(), n, &max_abs, &sum_sq);
    } else {
      const auto x = a.f16(name);
      const auto y = b.f16(name);
      k.diff_f16(x.data(), y.data(), n, &max_abs, &sum_sq);
    }
    r.tensors.push_back({name, max_abs, std::sqrt(sum_sq)});
    r.max_abs = std::max(r.max_abs, max_abs);
  }
  return r;
}

}  // namespace migkit
