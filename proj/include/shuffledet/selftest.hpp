// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace shuffledet {

/// Runs every operator, post-processing and metric implementation against
/// its slow reference on seeded random cases. One line per check is written
/// to `out`. Returns 0 iff all checks pass.
int run_selftest(std::ostream& out);

} // namespace shuffledet
