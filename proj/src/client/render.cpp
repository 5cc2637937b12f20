#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "autodb/client/client.hpp"

namespace autodb::client {

namespace {

// Display width counts UTF-8 code points, not bytes.
std::size_t width_of(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xc0) != 0x80; }));
}

void pad_to(std::string& out, const std::string& cell, std::size_t width) {
  out += cell;
  out.append(width - width_of(cell), ' ');
}

// Control characters in cells would break the layout.
std::string visible(const std::string& cell) {
  std::string out;
  for (char c : cell) {
    if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_table(const net::RowsResponse& rows) {
  const std::size_t n = rows.columns.size();
  std::vector<std::string> header(n);
  std::vector<std::size_t> widths(n);
  for (std::size_t c = 0; c < n; ++c) {
    header[c] = visible(rows.columns[c]);
    widths[c] = width_of(header[c]);
  }
  std::vector<std::vector<std::string>> body;
  body.reserve(rows.rows.size());
  for (const auto& row : rows.rows) {
    std::vector<std::string> cells(n);
    for (std::size_t c = 0; c < n && c < row.size(); ++c) {
      cells[c] = visible(row[c]);
      widths[c] = std::max(widths[c], width_of(cells[c]));
    }
    body.push_back(std::move(cells));
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < n; ++c) {
      if (c > 0) out += " | ";
      if (c + 1 == n) out += cells[c];
      else pad_to(out, cells[c], widths[c]);
    }
    return out + "\n";
  };
  std::string out = line(header);
  for (std::size_t c = 0; c < n; ++c) {
    if (c > 0) out += "-+-";
    out.append(widths[c], '-');
  }
  out += "\n";
  for (const auto& cells : body) out += line(cells);
  out += "(" + std::to_string(rows.rows.size()) + (rows.rows.size() == 1 ? " row)\n" : " rows)\n");
  return out;
}

std::string render_response(const net::WireResponse& response) {
  if (const auto* rows = std::get_if<net::RowsResponse>(&response)) return render_table(*rows);
  if (const auto* count = std::get_if<net::CountResponse>(&response)) return "OK " + std::to_string(count->count) + "\n";
  const auto& e = std::get<net::ErrorResponse>(response);
  return "ERR " + e.code + " " + e.message + "\n";
}

ScriptResult run_script(ClientSession& session, std::istream& in, std::ostream& out, bool keep_going) {
  ScriptResult result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line.compare(first, 2, "--") == 0) continue;
    if (line.back() == '\r') line.pop_back();
    auto response = session.execute(line);
    ++result.executed;
    if (std::holds_alternative<net::ErrorResponse>(response)) {
      ++result.failed;
      out << "line " << number << ": " << render_response(response);
      if (!keep_going) {
        result.stopped_at_line = number;
        return result;
      }
    } else {
      out << render_response(response);
    }
  }
  return result;
}

}  // namespace autodb::client
