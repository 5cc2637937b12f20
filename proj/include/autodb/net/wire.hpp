#pragma once

// Frame: 4-byte big-endian length N, then N payload bytes. A request payload
// is one SQL statement. A response payload is one of
//
//   OK rows=<n>\n<col>\t<col>...\n<cell>\t<cell>...\n   (n data lines)
//   OK count=<n>\n
//   ERR <CODE> <message>\n
//
// with cells and messages escaped (\\, \n, \t).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "autodb/engine/view.hpp"

namespace autodb::net {

inline constexpr std::size_t kMaxRequestPayload = (std::size_t{1} << 20) - 1;
inline constexpr std::size_t kMaxResponsePayload = std::size_t{64} << 20;

/// Throws DbError(kFrameTooLarge) when the payload exceeds `limit`.
std::string encode_frame(std::string_view payload, std::size_t limit = kMaxRequestPayload);

/// Reads up to `n` bytes into `out`; returns the count, 0 at end of stream.
using ByteSource = std::function<std::size_t(char* out, std::size_t n)>;

/// Reads one frame. Throws kConnectionClosed at a clean end of stream before
/// the first header byte, kTruncatedFrame if the stream ends inside a frame,
/// kFrameTooLarge if the declared length exceeds `limit`.
std::string read_frame(const ByteSource& source, std::size_t limit = kMaxRequestPayload);

/// Decodes a frame held entirely in `bytes`; trailing bytes are a protocol
/// error.
std::string decode_frame(std::string_view bytes, std::size_t limit = kMaxRequestPayload);

struct RowsResponse {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const RowsResponse&) const = default;
};

struct CountResponse {
  std::uint64_t count = 0;

  bool operator==(const CountResponse&) const = default;
};

struct ErrorResponse {
  std::string code;  // wire name, e.g. "SYNTAX"
  std::string message;

  bool operator==(const ErrorResponse&) const = default;
};

using WireResponse = std::variant<RowsResponse, CountResponse, ErrorResponse>;

std::string encode_response(const WireResponse& response);
/// Throws DbError(kProtocol) on anything outside the grammar, so that
/// decode followed by encode is byte-identical.
WireResponse decode_response(std::string_view payload);

WireResponse to_wire(const engine::ExecResult& result);
ErrorResponse to_wire(ErrorCode code, std::string_view message);

// Blocking socket helpers; retry on EINTR, never raise SIGPIPE.
ByteSource socket_source(int fd);
void write_all(int fd, std::string_view bytes);  // throws kConnectionClosed

}  // namespace autodb::net
