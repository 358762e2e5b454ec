#pragma once

#include <string>
#include <vector>

#include "hinet/grid_model.hpp"

namespace hinet {

/// Entry point of the command-line front end; `args` excludes argv[0].
/// Exit codes: 0 ok, 1 solver failure, 2 usage or input errors.
int cli_main(const std::vector<std::string>& args);

/// Parses `A:B:RESohm:TON:TOFF` (B may be `gnd`; times accept s/ms/us).
FaultEvent parse_fault_flag(const std::string& text);

}  // namespace hinet
