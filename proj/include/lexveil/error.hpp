// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEXVEIL_ERROR_HPP_
#define LEXVEIL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace lexveil {

// Failure taxonomy shared by the library and the CLI. The CLI maps kinds to
// process exit codes: configuration problems exit 2, I/O problems exit 3,
// malformed data exits 4.
enum class ErrorKind {
  kParse,       // unreadable record in an input file (carries a line number)
  kStructure,   // readable but structurally inconsistent data
  kValidation,  // well-formed data violating a store invariant
  kParameter,   // out-of-range argument or option
  kDomain,      // operation undefined for this input (e.g. |V| < 2)
  kFormat,      // bad magic, version, or truncated binary stream
  kChecksum,    // candidate table bound to a different store
  kConfig,      // inconsistent run configuration
  kIo,          // file system failure
  kTransport,   // socket-level failure
  kProtocol,    // malformed or unexpected wire frame
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter:
    case ErrorKind::kDomain:
    case ErrorKind::kChecksum:
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kTransport:
      return 3;
    case ErrorKind::kParse:
    case ErrorKind::kStructure:
    case ErrorKind::kValidation:
    case ErrorKind::kFormat:
    case ErrorKind::kProtocol:
      return 4;
  }
  return 1;
}

}  // namespace lexveil

#endif  // LEXVEIL_ERROR_HPP_
