// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace perfpred {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (unified diffs, JSONL artifacts).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that violates a data contract
/// (inconsistent diff application, overlapping index entries, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or parameter values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace perfpred
