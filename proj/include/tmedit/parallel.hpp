#pragma once

#include <exception>
#include <mutex>

namespace tmedit {

// Thread count from TMEDIT_THREADS (if set), applied to OpenMP.
void configure_threads_from_env();
int max_threads();

// Exceptions may not cross an OpenMP region boundary: capture the first one
// inside the loop body and rethrow after the region.
class FirstException {
 public:
  template <typename Fn>
  void run(Fn&& fn) noexcept {
    try {
      fn();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace tmedit
