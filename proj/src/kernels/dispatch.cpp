// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string_view>

#include "variants.hpp"

namespace migkit::kernels {

namespace {

bool force_scalar() {
  const char* v = std::getenv("MIGKIT_FORCE_SCALAR");
  return v != nullptr && std::string_view(v) != "" && std::string_view(v) != "0";
}

const KernelTable& select() {
  if (!force_scalar()) {
    if (const KernelTable* t = avx2_table()) return *t;
  }
  return detail::scalar_impl();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

const KernelTable& scalar_table() { return detail::scalar_impl(); }

const KernelTable* avx2_table() {
#if defined(MIGKIT_HAVE_AVX2)
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("f16c");
  return supported ? &detail::avx2_impl() : nullptr;
#else
  return nullptr;
#endif
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace migkit::kernels
