// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace shuffledet {

/// Entry point of the `shuffledet` tool. Subcommands: init-weights, detect,
/// eval, flops, selftest, bench. Reports go to `out` unless a file is
/// requested; diagnostics go to `err`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace shuffledet
