#pragma once

#include <stdexcept>
#include <string>

namespace ttsprep {

// Base for every error thrown by the library. Modules define their own
// subtypes next to the operations that raise them; the ones shared across
// modules live here.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoFailure : Error {
  using Error::Error;
};

struct EmptyAudio : Error {
  using Error::Error;
};

struct TooShort : Error {
  using Error::Error;
};

struct EmptyCorpus : Error {
  using Error::Error;
};

}  // namespace ttsprep
