// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace migkit {

/// Base class for every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a schema or domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or missing configuration (bad flags, missing template, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network or endpoint failure that survived the retry budget.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace migkit
