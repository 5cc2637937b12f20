#include "autodb/engine/statement_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>
#include <deque>
#include <map>
#include <optional>

#include "autodb/error.hpp"
#include "autodb/escape.hpp"

namespace autodb::engine {

std::string_view to_string(LogKind kind) noexcept {
  switch (kind) {
    case LogKind::kBegin: return "BEGIN";
    case LogKind::kCommit: return "COMMIT";
    case LogKind::kAbort: return "ABORT";
  }
  return "?";
}

std::string render_entry(const LogEntry& e) {
  return std::to_string(e.millis) + "\t" + std::string(to_string(e.kind)) + "\t" + escape_text(e.text) + "\n";
}

std::vector<LogEntry> parse_log(std::string_view text) {
  std::vector<LogEntry> out;
  std::size_t line_no = 0;
  auto corrupt = [&](const std::string& what) {
    throw DbError(ErrorCode::kLogCorrupt, "log line " + std::to_string(line_no) + ": " + what);
  };
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) break;  // torn final write
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl + 1);

    auto t1 = line.find('\t');
    auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) corrupt("expected three tab-separated fields");
    LogEntry e;
    std::string_view ms = line.substr(0, t1);
    auto [p, ec] = std::from_chars(ms.data(), ms.data() + ms.size(), e.millis);
    if (ms.empty() || ec != std::errc() || p != ms.data() + ms.size()) corrupt("bad timestamp");
    std::string_view kind = line.substr(t1 + 1, t2 - t1 - 1);
    if (kind == "BEGIN") {
      e.kind = LogKind::kBegin;
    } else if (kind == "COMMIT") {
      e.kind = LogKind::kCommit;
    } else if (kind == "ABORT") {
      e.kind = LogKind::kAbort;
    } else {
      corrupt("unknown entry kind '" + std::string(kind) + "'");
    }
    if (!unescape_text(line.substr(t2 + 1), e.text)) corrupt("bad escape in statement text");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<LogEntry> read_log(const std::filesystem::path& path) {
  return parse_log(storage::read_file(path));
}

std::vector<std::string> committed_statements(const std::vector<LogEntry>& entries) {
  enum class State { kOpen, kCommitted, kAborted };
  std::vector<std::pair<const std::string*, State>> begun;
  std::map<std::string_view, std::deque<std::size_t>> open;
  for (const auto& e : entries) {
    if (e.kind == LogKind::kBegin) {
      open[e.text].push_back(begun.size());
      begun.emplace_back(&e.text, State::kOpen);
      continue;
    }
    auto it = open.find(e.text);
    if (it == open.end() || it->second.empty()) {
      throw DbError(ErrorCode::kLogCorrupt,
                    std::string(to_string(e.kind)) + " without a matching BEGIN: " + e.text);
    }
    begun[it->second.front()].second = e.kind == LogKind::kCommit ? State::kCommitted : State::kAborted;
    it->second.pop_front();
  }
  std::vector<std::string> out;
  for (const auto& [text, state] : begun) {
    if (state == State::kCommitted) out.push_back(*text);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<StatementLog> StatementLog::open(const std::filesystem::path& path, bool sync_writes) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw DbError(ErrorCode::kIo, "cannot open log " + path.string() + ": " + std::strerror(errno));
  }
  return std::unique_ptr<StatementLog>(new StatementLog(path, storage::FileHandle(fd), sync_writes));
}

void StatementLog::append(LogKind kind, std::string_view text) {
  using namespace std::chrono;
  LogEntry e{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count(), kind, std::string(text)};
  std::string line = render_entry(e);
  std::lock_guard lock(mutex_);
  if (!fd_) throw DbError(ErrorCode::kIo, "statement log is closed");
  std::size_t done = 0;
  while (done < line.size()) {
    ssize_t n = ::write(fd_.get(), line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DbError(ErrorCode::kIo, std::string("log write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_.get()) != 0) {
    throw DbError(ErrorCode::kIo, std::string("log sync failed: ") + std::strerror(errno));
  }
}

void StatementLog::close() {
  std::lock_guard lock(mutex_);
  fd_ = storage::FileHandle();
}

LogScope::LogScope(StatementLog* log, std::string_view text) : log_(log), text_(text) {
  if (log_ != nullptr) log_->append(LogKind::kBegin, text_);
}

LogScope::~LogScope() {
  if (log_ == nullptr || done_) return;
  try {
    log_->append(LogKind::kAbort, text_);
  } catch (...) {
  }
}

void LogScope::commit() {
  done_ = true;
  if (log_ != nullptr) log_->append(LogKind::kCommit, text_);
}

}  // namespace autodb::engine
