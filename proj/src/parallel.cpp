#include "rmac/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace rmac {

int env_thread_cap() {
  const char* s = std::getenv("RMAC_THREADS");
  if (s == nullptr || *s == '\0') return 0;
  try {
    return std::max(0, std::stoi(s));
  } catch (...) {
    return 0;
  }
}

void set_thread_count(int n) {
  if (n <= 0) n = omp_get_num_procs();
  if (int cap = env_thread_cap(); cap > 0) n = std::min(n, cap);
  omp_set_num_threads(std::max(1, n));
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace rmac
