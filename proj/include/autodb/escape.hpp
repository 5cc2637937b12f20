#pragma once

#include <string>
#include <string_view>

namespace autodb {

// Line-safe escaping shared by the data files, index files, the statement log
// and the wire format: backslash, newline and tab become \\, \n and \t.
std::string escape_text(std::string_view raw);

// Inverse of escape_text. Also accepts \s for a space (used by the record
// encoding to protect trailing spaces from pad stripping). Returns false on a
// dangling or unknown escape.
bool unescape_text(std::string_view escaped, std::string& out);

}  // namespace autodb
