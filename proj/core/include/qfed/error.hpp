// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qfed {

// Single exception type for contract violations across the library.
// Messages carry enough context to act on; nothing is reported by error code.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qfed
