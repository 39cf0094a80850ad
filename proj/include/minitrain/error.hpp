#pragma once

#include <stdexcept>
#include <string>

namespace minitrain {

// Error taxonomy. Everything thrown by this library derives from Error so the
// CLI boundary can catch a single type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };      // extent mismatch
struct BoundsError : Error { using Error::Error; };     // index / range out of bounds
struct DtypeError : Error { using Error::Error; };      // checkpoint / config dtype mismatch
struct ConfigError : Error { using Error::Error; };     // invalid configuration
struct DataError : Error { using Error::Error; };       // token files, labels, batches
struct StateError : Error { using Error::Error; };      // stale saved state, region misuse
struct NonFiniteError : Error { using Error::Error; };  // NaN/Inf surfaced by an op

template <class E = Error>
inline void check(bool cond, const std::string& msg) {
  if (!cond) throw E(msg);
}

}  // namespace minitrain
