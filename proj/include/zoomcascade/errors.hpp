// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace zoomcascade {

/// Invalid or inconsistent configuration (grid geometry, detector params, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed an argument outside the operation's domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Key missing from a replay archive or scene collection.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Metric requested on data for which it is not defined.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite values encountered during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal contract, e.g. a forward cache used after the model changed.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace zoomcascade
