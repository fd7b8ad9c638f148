#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "sdpc/model.hpp"
#include "sdpc/tolerance.hpp"

namespace sdpc {

/// SDPA sparse format. The file's primal "min c^T x s.t. sum F_i x_i - F_0 PSD"
/// is read as the dual form with A_i = F_i, b = c and c = -F_0 (so y = -x and
/// values change sign). Blocks are flattened into one block-diagonal matrix.
SdpProblem parse_sdpa(std::istream& in);
SdpProblem read_sdpa(const std::string& path);

/// Single dense block; exact inverse of parse_sdpa on the data.
void write_sdpa(const SdpProblem& p, std::ostream& out);
void write_sdpa(const SdpProblem& p, const std::string& path);

nlohmann::json report_to_json(const SolveReport& report);
/// Everything except the epsilon handle, which is not serializable.
SolveReport report_from_json(const nlohmann::json& j);

void write_report(const SolveReport& report, const std::string& path);
SolveReport read_report(const std::string& path);

/// Overrides from SDPC_TOL_ABS, SDPC_TOL_REL, SDPC_TOL_GAP, SDPC_TOL_FEAS,
/// SDPC_TOL_BRANCH, SDPC_TOL_SUB, SDPC_TOL_FACE, SDPC_MAX_ITER and
/// SDPC_EPSILON_DEFAULT.
ToleranceConfig tolerance_from_env(ToleranceConfig base = {});

/// Exit codes: 0 solved and written (or verified), 2 contract violation or a
/// certificate that fails verification, 1 I/O, parse or usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace sdpc
