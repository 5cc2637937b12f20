#include "autodb/error.hpp"
#include "autodb/escape.hpp"
#include "autodb/value.hpp"

namespace autodb {

std::string_view wire_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kSyntax:
    case ErrorCode::kNesting:
    case ErrorCode::kUnterminatedString:
    case ErrorCode::kIllegalCharacter:
    case ErrorCode::kIntegerOutOfRange:
      return "SYNTAX";
    case ErrorCode::kTableExists: return "TABLE_EXISTS";
    case ErrorCode::kUnknownTable: return "UNKNOWN_TABLE";
    case ErrorCode::kUnknownColumn: return "UNKNOWN_COLUMN";
    case ErrorCode::kIndexExists: return "INDEX_EXISTS";
    case ErrorCode::kInvalidSchema: return "INVALID_SCHEMA";
    case ErrorCode::kCorruptMeta: return "CORRUPT_META";
    case ErrorCode::kSizeMismatch: return "SIZE_MISMATCH";
    case ErrorCode::kPageOutOfRange: return "PAGE_OUT_OF_RANGE";
    case ErrorCode::kDecodeError: return "DECODE";
    case ErrorCode::kNoSuchRecord: return "NO_SUCH_RECORD";
    case ErrorCode::kDeletedRecord: return "DELETED_RECORD";
    case ErrorCode::kTypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::kStringTooLong: return "STRING_TOO_LONG";
    case ErrorCode::kArity: return "ARITY";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kConstraint: return "CONSTRAINT";
    case ErrorCode::kDuplicateEntry: return "DUPLICATE_ENTRY";
    case ErrorCode::kNoSuchEntry: return "NO_SUCH_ENTRY";
    case ErrorCode::kBoundsInverted: return "BOUNDS_INVERTED";
    case ErrorCode::kCorruptIndexFile: return "CORRUPT_INDEX";
    case ErrorCode::kLogCorrupt: return "LOG_CORRUPT";
    case ErrorCode::kReplayDivergence: return "REPLAY_DIVERGENCE";
    case ErrorCode::kFrameTooLarge: return "FRAME_TOO_LARGE";
    case ErrorCode::kTruncatedFrame: return "TRUNCATED_FRAME";
    case ErrorCode::kConnectionClosed: return "CONNECTION_CLOSED";
    case ErrorCode::kProtocol: return "PROTOCOL";
    case ErrorCode::kAdminDisabled: return "ADMIN_DISABLED";
    case ErrorCode::kInternal: return "INTERNAL";
  }
  return "INTERNAL";
}

std::string_view to_string(ColumnType type) noexcept {
  return type == ColumnType::kInt ? "INT" : "STR";
}

std::string_view to_string(CompareOp op) noexcept {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

bool compare(const Value& lhs, CompareOp op, const Value& rhs) {
  if (lhs.index() != rhs.index()) {
    throw DbError(ErrorCode::kTypeMismatch,
                  "cannot compare " + std::string(to_string(type_of(lhs))) + " with " +
                      std::string(to_string(type_of(rhs))));
  }
  switch (op) {
    case CompareOp::kEq: return lhs == rhs;
    case CompareOp::kNe: return lhs != rhs;
    case CompareOp::kLt: return lhs < rhs;
    case CompareOp::kLe: return lhs <= rhs;
    case CompareOp::kGt: return lhs > rhs;
    case CompareOp::kGe: return lhs >= rhs;
  }
  return false;
}

std::string to_display(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

std::string to_sql_literal(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  std::string out = "'";
  for (char c : std::get<std::string>(v)) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string escape_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

bool unescape_text(std::string_view escaped, std::string& out) {
  out.clear();
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    char c = escaped[i];
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i == escaped.size()) return false;
    switch (escaped[i]) {
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 's': out += ' '; break;
      default: return false;
    }
  }
  return true;
}

}  // namespace autodb
