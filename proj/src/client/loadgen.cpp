#include <algorithm>
#include <atomic>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "autodb/client/client.hpp"
#include "autodb/error.hpp"

namespace autodb::client {

namespace {

const net::ErrorResponse* as_error(const net::WireResponse& r) { return std::get_if<net::ErrorResponse>(&r); }

void require_ok(ClientSession& s, const std::string& sql, bool allow_exists = false) {
  auto r = s.execute(sql);
  if (const auto* e = as_error(r)) {
    if (allow_exists && e->code == "TABLE_EXISTS") return;
    throw DbError(ErrorCode::kInternal, "loadgen setup failed on '" + sql + "': " + e->code + " " + e->message);
  }
}

net::RowsResponse rows_of(net::WireResponse r, const std::string& sql) {
  if (const auto* e = as_error(r)) throw DbError(ErrorCode::kInternal, sql + ": " + e->code + " " + e->message);
  return std::get<net::RowsResponse>(std::move(r));
}

}  // namespace

LoadReport serial_oracle(const LoadScenario& s) {
  LoadReport r;
  r.attempts = s.clients;
  std::int64_t capacity = s.capacity;
  for (std::size_t i = 0; i < s.clients; ++i) {
    if (capacity - 1 >= 0) {
      --capacity;
      ++r.successes;
    } else {
      ++r.constraint_rejections;
    }
  }
  r.final_capacity = capacity;
  r.enrollment_count = r.successes;
  return r;
}

LoadReport run_loadgen(const std::string& host, std::uint16_t port, const LoadScenario& s) {
  const std::string course = std::to_string(s.course_id);
  if (s.prepare) {
    auto setup = ClientSession::connect(host, port);
    require_ok(setup, "create table course (id int primary key, name str(32), capacity int, check capacity >= 0)", true);
    require_ok(setup, "create table enrollment (course int not null, student int not null)", true);
    require_ok(setup, "delete from enrollment where course = " + course);
    require_ok(setup, "delete from course where id = " + course);
    require_ok(setup, "insert into course values (" + course + ", 'course " + course + "', " + std::to_string(s.capacity) + ")");
  }

  std::vector<std::size_t> order(s.clients);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(s.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<unsigned> jitter_us(s.clients);
  for (auto& j : jitter_us) j = static_cast<unsigned>(rng() % 200);

  std::atomic<std::size_t> successes{0}, rejections{0}, errors{0}, statements{0};
  const auto started = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  threads.reserve(s.clients);
  for (std::size_t i = 0; i < s.clients; ++i) {
    const std::size_t student = order[i];
    const unsigned jitter = jitter_us[i];
    threads.emplace_back([&, student, jitter] {
      std::this_thread::sleep_for(std::chrono::microseconds(jitter));
      try {
        auto session = ClientSession::connect(host, port);
        auto r = session.execute("update course set capacity = capacity - 1 where id = " + course);
        ++statements;
        if (const auto* e = as_error(r)) {
          ++(e->code == "CONSTRAINT" ? rejections : errors);
          return;
        }
        if (std::get<net::CountResponse>(r).count != 1) {
          ++errors;
          return;
        }
        auto ins = session.execute("insert into enrollment values (" + course + ", " + std::to_string(student) + ")");
        ++statements;
        ++(as_error(ins) ? errors : successes);
      } catch (const DbError&) {
        ++errors;
      }
    });
  }
  for (auto& t : threads) t.join();

  LoadReport r;
  r.elapsed = std::chrono::steady_clock::now() - started;
  r.attempts = s.clients;
  r.successes = successes;
  r.constraint_rejections = rejections;
  r.errors = errors;
  r.throughput = r.elapsed.count() > 0 ? static_cast<double>(statements) / r.elapsed.count() : 0;

  auto check = ClientSession::connect(host, port);
  const std::string cap_sql = "select capacity from course where id = " + course;
  const auto cap = rows_of(check.execute(cap_sql), cap_sql);
  if (cap.rows.size() != 1) throw DbError(ErrorCode::kInternal, "course " + course + " missing after the run");
  r.final_capacity = std::stoll(cap.rows[0][0]);
  const std::string enr_sql = "select student from enrollment where course = " + course;
  r.enrollment_count = rows_of(check.execute(enr_sql), enr_sql).rows.size();
  return r;
}

std::string format_report(const LoadReport& r) {
  std::ostringstream out;
  out << "attempts=" << r.attempts << " successes=" << r.successes
      << " constraint_rejections=" << r.constraint_rejections << " errors=" << r.errors
      << " final_capacity=" << r.final_capacity << " enrollments=" << r.enrollment_count
      << " elapsed=" << r.elapsed.count() << "s throughput=" << static_cast<long long>(r.throughput) << " stmt/s";
  return out.str();
}

}  // namespace autodb::client
