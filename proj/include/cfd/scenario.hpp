#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cfd/errors.hpp"

namespace cfd {

/// Scenario file failed to parse or is missing/mistyping a field (exit 2).
class ValidationError : public Error {
  public:
    using Error::Error;
};

struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> horizon;
    std::optional<double> tol;
    std::optional<std::string> expected_kind;  ///< must match the file's kind when set
};

/// Runs one scenario file and writes report.json and tables/*.csv under
/// out_dir. Returns the process exit status:
///   0 scenario executed and every verification passed,
///   1 some verification failed,
///   2 parse or validation error,
///   3 numerical failure.
int run_scenario(const std::string& path, const std::string& out_dir,
                 const ScenarioOverrides& overrides = {});

}  // namespace cfd
