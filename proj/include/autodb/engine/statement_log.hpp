#pragma once

// Append-only statement log. One line per entry:
//   <epoch-millis>\t<BEGIN|COMMIT|ABORT>\t<escaped statement text>
// BEGIN is written before a statement touches any file, COMMIT after its
// last write, ABORT when it fails.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "autodb/storage/storage.hpp"

namespace autodb::engine {

enum class LogKind { kBegin, kCommit, kAbort };

std::string_view to_string(LogKind kind) noexcept;

struct LogEntry {
  std::int64_t millis = 0;
  LogKind kind = LogKind::kBegin;
  std::string text;

  bool operator==(const LogEntry&) const = default;
};

std::string render_entry(const LogEntry& entry);

/// Parses a whole log. A final line without its terminator is a torn write
/// and is dropped; any other malformed line throws DbError(kLogCorrupt).
std::vector<LogEntry> parse_log(std::string_view text);
std::vector<LogEntry> read_log(const std::filesystem::path& path);

/// Texts of the committed statements in BEGIN order. A COMMIT or ABORT
/// closes the earliest open BEGIN with the same text; one with no open BEGIN
/// throws kLogCorrupt. BEGINs never closed are skipped.
std::vector<std::string> committed_statements(const std::vector<LogEntry>& entries);

class StatementLog {
 public:
  static std::unique_ptr<StatementLog> open(const std::filesystem::path& path, bool sync_writes);

  const std::filesystem::path& path() const noexcept { return path_; }
  void append(LogKind kind, std::string_view text);
  void close();

 private:
  StatementLog(std::filesystem::path path, storage::FileHandle fd, bool sync)
      : path_(std::move(path)), fd_(std::move(fd)), sync_(sync) {}

  std::filesystem::path path_;
  std::mutex mutex_;
  storage::FileHandle fd_;
  bool sync_;
};

/// BEGIN on construction; ABORT on destruction unless commit() was called.
/// A null log makes every call a no-op.
class LogScope {
 public:
  LogScope(StatementLog* log, std::string_view text);
  LogScope(const LogScope&) = delete;
  LogScope& operator=(const LogScope&) = delete;
  ~LogScope();

  void commit();

 private:
  StatementLog* log_;
  std::string text_;
  bool done_ = false;
};

}  // namespace autodb::engine
