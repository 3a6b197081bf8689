// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mimogan {

/// Invalid configuration or contract violation (bad dimensions, broken invariants).
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// NaN/Inf encountered where finite values are required.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File container problems. `kind` distinguishes magic/version/checksum/truncation.
struct io_error : std::runtime_error {
  enum class kind { open, magic, version, truncated, checksum, other };
  kind what_kind;
  io_error(kind k, const std::string& msg) : std::runtime_error(msg), what_kind(k) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw config_error(msg);
}

}  // namespace mimogan
