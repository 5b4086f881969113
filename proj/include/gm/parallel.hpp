#pragma once

namespace gm {

/// Execution policy for the data-parallel kernels. Parallel variants
/// split work per output element with serial inner reductions, so both
/// policies produce bit-identical results.
enum class Exec { Serial, Parallel };

/// Number of OpenMP threads the parallel policy will use (1 without OpenMP).
int max_threads();

}  // namespace gm
