#pragma once

namespace rmac {

/// Execution policy for the data-parallel kernels. `serial` runs the plain
/// reference loops; `parallel` runs the OpenMP variants. Both produce
/// bit-identical results.
enum class Exec { serial, parallel };

/// Thread cap from the RMAC_THREADS environment variable, 0 if unset.
int env_thread_cap();

/// Sets the OpenMP team size, honoring RMAC_THREADS as an upper bound.
/// n <= 0 means "use the runtime default (capped)".
void set_thread_count(int n);

int thread_count();

}  // namespace rmac
