#include "autodb/net/wire.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "autodb/error.hpp"
#include "autodb/escape.hpp"

namespace autodb::net {

namespace {

[[noreturn]] void protocol(const std::string& what) {
  throw DbError(ErrorCode::kProtocol, "malformed response: " + what);
}

void check_size(std::size_t n, std::size_t limit) {
  if (n > limit) {
    throw DbError(ErrorCode::kFrameTooLarge,
                  "frame of " + std::to_string(n) + " bytes exceeds the " + std::to_string(limit) + "-byte limit");
  }
}

// Canonical decimal only: no sign, no leading zeros.
bool parse_count(std::string_view s, std::uint64_t& out) {
  if (s.empty() || (s.size() > 1 && s[0] == '0')) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string_view take_line(std::string_view& rest) {
  auto nl = rest.find('\n');
  if (nl == std::string_view::npos) protocol("missing line terminator");
  std::string_view line = rest.substr(0, nl);
  rest.remove_prefix(nl + 1);
  return line;
}

std::vector<std::string> split_cells(std::string_view line) {
  std::vector<std::string> out;
  while (true) {
    auto tab = line.find('\t');
    std::string cell;
    if (!unescape_text(line.substr(0, tab), cell)) protocol("bad escape in cell");
    out.push_back(std::move(cell));
    if (tab == std::string_view::npos) return out;
    line.remove_prefix(tab + 1);
  }
}

std::string join_cells(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += '\t';
    out += escape_text(cells[i]);
  }
  return out;
}

}  // namespace

std::string encode_frame(std::string_view payload, std::size_t limit) {
  check_size(payload.size(), limit);
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out += static_cast<char>((n >> 24) & 0xff);
  out += static_cast<char>((n >> 16) & 0xff);
  out += static_cast<char>((n >> 8) & 0xff);
  out += static_cast<char>(n & 0xff);
  out += payload;
  return out;
}

std::string read_frame(const ByteSource& source, std::size_t limit) {
  unsigned char header[4];
  std::size_t got = 0;
  while (got < 4) {
    std::size_t n = source(reinterpret_cast<char*>(header) + got, 4 - got);
    if (n == 0) {
      if (got == 0) throw DbError(ErrorCode::kConnectionClosed, "connection closed");
      throw DbError(ErrorCode::kTruncatedFrame, "stream ended inside a frame header");
    }
    got += n;
  }
  const std::size_t len = (std::size_t{header[0]} << 24) | (std::size_t{header[1]} << 16) |
                          (std::size_t{header[2]} << 8) | std::size_t{header[3]};
  check_size(len, limit);
  std::string payload(len, '\0');
  got = 0;
  while (got < len) {
    std::size_t n = source(payload.data() + got, len - got);
    if (n == 0) {
      throw DbError(ErrorCode::kTruncatedFrame, "stream ended after " + std::to_string(got) + " of " +
                                                    std::to_string(len) + " payload bytes");
    }
    got += n;
  }
  return payload;
}

std::string decode_frame(std::string_view bytes, std::size_t limit) {
  std::size_t pos = 0;
  std::string payload = read_frame(
      [&](char* out, std::size_t n) {
        n = std::min(n, bytes.size() - pos);
        std::memcpy(out, bytes.data() + pos, n);
        pos += n;
        return n;
      },
      limit);
  if (pos != bytes.size()) throw DbError(ErrorCode::kProtocol, "trailing bytes after frame");
  return payload;
}

// ---------------------------------------------------------------------------

std::string encode_response(const WireResponse& response) {
  if (const auto* rows = std::get_if<RowsResponse>(&response)) {
    std::string out = "OK rows=" + std::to_string(rows->rows.size()) + "\n";
    out += join_cells(rows->columns) + "\n";
    for (const auto& row : rows->rows) out += join_cells(row) + "\n";
    return out;
  }
  if (const auto* count = std::get_if<CountResponse>(&response)) {
    return "OK count=" + std::to_string(count->count) + "\n";
  }
  const auto& err = std::get<ErrorResponse>(response);
  return "ERR " + err.code + " " + escape_text(err.message) + "\n";
}

WireResponse decode_response(std::string_view payload) {
  std::string_view rest = payload;
  std::string_view status = take_line(rest);
  if (status.rfind("OK rows=", 0) == 0) {
    std::uint64_t n = 0;
    if (!parse_count(status.substr(8), n)) protocol("bad row count");
    RowsResponse r;
    r.columns = split_cells(take_line(rest));
    for (std::uint64_t i = 0; i < n; ++i) {
      auto row = split_cells(take_line(rest));
      if (row.size() != r.columns.size()) protocol("row " + std::to_string(i) + " has the wrong cell count");
      r.rows.push_back(std::move(row));
    }
    if (!rest.empty()) protocol("trailing data after rows");
    return r;
  }
  if (status.rfind("OK count=", 0) == 0) {
    CountResponse c;
    if (!parse_count(status.substr(9), c.count)) protocol("bad count");
    if (!rest.empty()) protocol("trailing data after count");
    return c;
  }
  if (status.rfind("ERR ", 0) == 0) {
    std::string_view body = status.substr(4);
    auto sp = body.find(' ');
    if (sp == std::string_view::npos || sp == 0) protocol("error line without code");
    ErrorResponse e;
    e.code = std::string(body.substr(0, sp));
    for (char ch : e.code) {
      if (!((ch >= 'A' && ch <= 'Z') || ch == '_')) protocol("bad error code");
    }
    if (!unescape_text(body.substr(sp + 1), e.message)) protocol("bad escape in message");
    if (!rest.empty()) protocol("trailing data after error");
    return e;
  }
  protocol("unknown status line");
}

ErrorResponse to_wire(ErrorCode code, std::string_view message) {
  return ErrorResponse{std::string(wire_name(code)), std::string(message)};
}

WireResponse to_wire(const engine::ExecResult& result) {
  if (const auto* e = std::get_if<engine::EngineError>(&result)) return to_wire(e->code, e->message);
  if (const auto* c = std::get_if<engine::RowCount>(&result)) return CountResponse{c->count};
  const auto& view = std::get<engine::View>(result);
  RowsResponse r;
  for (const auto& col : view.columns) r.columns.push_back(col.name);
  r.rows.reserve(view.rows.size());
  for (const auto& row : view.rows) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (const auto& v : row) cells.push_back(to_display(v));
    r.rows.push_back(std::move(cells));
  }
  return r;
}

// ---------------------------------------------------------------------------

ByteSource socket_source(int fd) {
  return [fd](char* out, std::size_t n) -> std::size_t {
    while (true) {
      ssize_t got = ::recv(fd, out, n, 0);
      if (got >= 0) return static_cast<std::size_t>(got);
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) return 0;
      throw DbError(ErrorCode::kIo, std::string("recv failed: ") + std::strerror(errno));
    }
  };
}

void write_all(int fd, std::string_view bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    ssize_t n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DbError(ErrorCode::kConnectionClosed, std::string("send failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace autodb::net
