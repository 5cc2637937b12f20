#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autodb {

enum class ErrorCode {
  // frontend
  kSyntax,
  kNesting,
  kUnterminatedString,
  kIllegalCharacter,
  kIntegerOutOfRange,
  // catalog
  kTableExists,
  kUnknownTable,
  kUnknownColumn,
  kIndexExists,
  kInvalidSchema,
  // physical layer
  kCorruptMeta,
  kSizeMismatch,
  kPageOutOfRange,
  kDecodeError,
  kNoSuchRecord,
  kDeletedRecord,
  kTypeMismatch,
  kStringTooLong,
  kArity,
  kIo,
  // constraints
  kConstraint,
  // index
  kDuplicateEntry,
  kNoSuchEntry,
  kBoundsInverted,
  kCorruptIndexFile,
  // statement log
  kLogCorrupt,
  kReplayDivergence,
  // wire
  kFrameTooLarge,
  kTruncatedFrame,
  kConnectionClosed,
  kProtocol,
  // server
  kAdminDisabled,
  kInternal,
};

// Name used on the wire in `ERR <code> <message>` responses. All frontend
// errors collapse to SYNTAX.
std::string_view wire_name(ErrorCode code) noexcept;

class DbError : public std::runtime_error {
 public:
  DbError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace autodb
