#include "tmedit/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tmedit/errors.hpp"

namespace tmedit {

void configure_threads_from_env() {
  const char* env = std::getenv("TMEDIT_THREADS");
  if (env == nullptr || *env == '\0') return;
  int n = 0;
  try {
    n = std::stoi(env);
  } catch (const std::exception&) {
    throw UsageError(std::string("TMEDIT_THREADS is not an integer: ") + env);
  }
  if (n < 1) throw UsageError("TMEDIT_THREADS must be positive");
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tmedit
