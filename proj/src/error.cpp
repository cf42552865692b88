#include "wmeval/error.hpp"

namespace wmeval {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kSample: return "sample";
    case ErrorKind::kCorpus: return "corpus";
    case ErrorKind::kInvariant: return "invariant";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
  }
  return "unknown";
}

}  // namespace wmeval
