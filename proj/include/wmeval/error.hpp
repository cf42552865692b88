#pragma once

#include <stdexcept>
#include <string>

namespace wmeval {

enum class ErrorKind {
  kParameter,   // invalid configuration value
  kShape,       // image dimension/channel mismatch
  kCapacity,    // watermark message does not fit the host image
  kDegenerate,  // statistic undefined (zero variance, constant vector)
  kSample,      // latent sample too small or non-finite
  kCorpus,      // empty or inconsistent batch input
  kInvariant,   // value violates a domain-type invariant
  kIo,          // file could not be read or written
  kFormat,      // malformed input document (JSON, CSV, PNG)
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wmeval
