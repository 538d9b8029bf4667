#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace mdepth {

// Error categories map onto CLI exit codes: usage=1, data=2, numeric=3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

// Runs fn(i) for i in [0, n). workers <= 1 runs inline; otherwise the range
// is split into contiguous chunks, one thread each. Callers must write
// results to disjoint slots so output does not depend on the worker count.
void parallel_for(int64_t n, int workers, const std::function<void(int64_t)>& fn);

// FNV-1a, used for config fingerprints in run.txt.
uint64_t fnv1a(const std::string& text);

}  // namespace mdepth
