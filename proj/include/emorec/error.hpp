#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emorec {

enum class Errc {
  invalid_argument,
  parse_error,
  io_error,
  unknown_emotion,
  empty_corpus,
  no_modelled_tokens,
  zero_likelihood,
  version_mismatch,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::parse_error: return "parse_error";
    case Errc::io_error: return "io_error";
    case Errc::unknown_emotion: return "unknown_emotion";
    case Errc::empty_corpus: return "empty_corpus";
    case Errc::no_modelled_tokens: return "no_modelled_tokens";
    case Errc::zero_likelihood: return "zero_likelihood";
    case Errc::version_mismatch: return "version_mismatch";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code; the
// CLI maps codes to exit statuses and the service maps them to HTTP errors.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace emorec
