#pragma once

#include <stdexcept>
#include <string>

namespace sbn {

// Error categories shared by the core library, the C API status codes and the
// CLI exit codes.
enum class Errc {
  io = 1,
  parse,
  schema,
  config,
  input,
  usage,
  domain,
  shape,
  divergence,
  generation,
  internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace sbn
