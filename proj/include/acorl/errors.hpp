// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace acorl {

// Error taxonomy shared by the library and the CLI exit-code mapping:
//   ConfigError    -> exit 2 (bad configuration, infeasible request)
//   DataError      -> exit 3 (parse failures, corrupt or truncated files)
//   ContractError  -> exit 4 (caller violated an operation contract)
//   DomainError    -> exit 4 (numeric domain violation, e.g. log of <= 0)

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace acorl
