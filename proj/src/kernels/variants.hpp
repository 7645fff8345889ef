// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "migkit/kernels/kernels.hpp"

namespace migkit::kernels::detail {

const KernelTable& scalar_impl();

#if defined(MIGKIT_HAVE_AVX2)
const KernelTable& avx2_impl();
#endif

}  // namespace migkit::kernels::detail
