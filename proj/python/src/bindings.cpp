#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "autodb/client/client.hpp"
#include "autodb/engine/database.hpp"
#include "autodb/error.hpp"
#include "autodb/net/server.hpp"
#include "autodb/net/wire.hpp"

namespace py = pybind11;
using namespace autodb;

namespace {

py::dict wire_to_dict(const net::WireResponse& r) {
  py::dict d;
  if (const auto* rows = std::get_if<net::RowsResponse>(&r)) {
    d["ok"] = true;
    d["columns"] = rows->columns;
    d["rows"] = rows->rows;
  } else if (const auto* count = std::get_if<net::CountResponse>(&r)) {
    d["ok"] = true;
    d["count"] = count->count;
  } else {
    const auto& e = std::get<net::ErrorResponse>(r);
    d["ok"] = false;
    d["error_code"] = e.code;
    d["message"] = e.message;
  }
  return d;
}

net::WireResponse dict_to_wire(const py::dict& d) {
  if (!d.contains("ok") || !d["ok"].cast<bool>()) {
    return net::ErrorResponse{d["error_code"].cast<std::string>(), d["message"].cast<std::string>()};
  }
  if (d.contains("count")) return net::CountResponse{d["count"].cast<std::uint64_t>()};
  return net::RowsResponse{d["columns"].cast<std::vector<std::string>>(),
                           d["rows"].cast<std::vector<std::vector<std::string>>>()};
}

// Engine results keep INT cells as Python ints.
py::dict exec_to_dict(const engine::ExecResult& r) {
  py::dict d;
  if (const auto* view = std::get_if<engine::View>(&r)) {
    py::list columns, rows;
    for (const auto& c : view->columns) columns.append(c.name);
    for (const auto& row : view->rows) {
      py::list cells;
      for (const auto& v : row) {
        if (const auto* i = std::get_if<std::int64_t>(&v)) cells.append(*i);
        else cells.append(std::get<std::string>(v));
      }
      rows.append(py::tuple(cells));
    }
    d["ok"] = true;
    d["columns"] = columns;
    d["rows"] = rows;
  } else if (const auto* count = std::get_if<engine::RowCount>(&r)) {
    d["ok"] = true;
    d["count"] = count->count;
  } else {
    const auto& e = std::get<engine::EngineError>(r);
    d["ok"] = false;
    d["error_code"] = std::string(wire_name(e.code));
    d["message"] = e.message;
  }
  return d;
}

py::dict report_to_dict(const client::LoadReport& r) {
  py::dict d;
  d["attempts"] = r.attempts;
  d["successes"] = r.successes;
  d["constraint_rejections"] = r.constraint_rejections;
  d["errors"] = r.errors;
  d["elapsed"] = r.elapsed.count();
  d["throughput"] = r.throughput;
  d["final_capacity"] = r.final_capacity;
  d["enrollment_count"] = r.enrollment_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_autodb, m) {
  m.doc() = "Bindings for the autodb engine, server and wire codec";

  static py::exception<DbError> db_error(m, "DbError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DbError& e) {
      // args are (wire code, message)
      py::tuple args = py::make_tuple(std::string(wire_name(e.code())), std::string(e.what()));
      PyErr_SetObject(db_error.ptr(), args.ptr());
    }
  });

  m.attr("MAX_REQUEST_PAYLOAD") = net::kMaxRequestPayload;
  m.attr("MAX_RESPONSE_PAYLOAD") = net::kMaxResponsePayload;

  m.def("encode_frame", [](const py::bytes& payload) { return py::bytes(net::encode_frame(std::string(payload))); },
        py::arg("payload"));
  m.def("decode_frame", [](const py::bytes& data) { return py::bytes(net::decode_frame(std::string(data))); },
        py::arg("data"));
  m.def("encode_response", [](const py::dict& d) { return py::bytes(net::encode_response(dict_to_wire(d))); },
        py::arg("response"));
  m.def("decode_response", [](const py::bytes& payload) { return wire_to_dict(net::decode_response(std::string(payload))); },
        py::arg("payload"));

  py::class_<engine::Database>(m, "Database")
      .def(py::init([](const std::filesystem::path& dir, std::size_t index_order) {
             engine::EngineConfig config;
             config.index_order = index_order;
             return engine::Database::open(dir, config);
           }),
           py::arg("path"), py::arg("index_order") = index::BPlusTree::kDefaultOrder)
      .def("execute",
           [](engine::Database& db, const std::string& sql) {
             engine::ExecResult r;
             {
               py::gil_scoped_release unlocked;
               r = db.execute_sql(sql);
             }
             return exec_to_dict(r);
           },
           py::arg("sql"))
      .def("checkpoint", &engine::Database::checkpoint, py::call_guard<py::gil_scoped_release>())
      .def("close", &engine::Database::close, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("closed", &engine::Database::closed);

  py::class_<net::Server>(m, "Server")
      .def(py::init([](const std::filesystem::path& data_dir, std::uint16_t port, std::size_t workers, bool allow_admin,
                       const std::string& host) {
             net::ServerConfig c;
             c.data_dir = data_dir;
             c.port = port;
             c.worker_count = workers;
             c.allow_admin = allow_admin;
             c.host = host;
             py::gil_scoped_release unlocked;
             return net::Server::start(c);
           }),
           py::arg("data_dir"), py::arg("port") = 0, py::arg("workers") = 4, py::arg("allow_admin") = false,
           py::arg("host") = "127.0.0.1")
      .def_property_readonly("port", &net::Server::port)
      .def_property_readonly("statements_served", &net::Server::statements_served)
      .def_property_readonly("max_in_flight", &net::Server::max_in_flight)
      .def("wait", &net::Server::wait, py::call_guard<py::gil_scoped_release>())
      .def("shutdown", &net::Server::shutdown, py::call_guard<py::gil_scoped_release>());

  py::class_<client::ClientSession>(m, "Client")
      .def(py::init([](const std::string& host, std::uint16_t port) {
             py::gil_scoped_release unlocked;
             return client::ClientSession::connect(host, port);
           }),
           py::arg("host"), py::arg("port"))
      .def("execute",
           [](client::ClientSession& s, const std::string& sql) {
             net::WireResponse r;
             {
               py::gil_scoped_release unlocked;
               r = s.execute(sql);
             }
             return wire_to_dict(r);
           },
           py::arg("sql"))
      .def("close", &client::ClientSession::close)
      .def_property_readonly("is_open", &client::ClientSession::is_open);

  m.def("serial_oracle",
        [](std::int64_t capacity, std::size_t clients) {
          return report_to_dict(client::serial_oracle({capacity, clients, 0, 1, true}));
        },
        py::arg("capacity"), py::arg("clients"));
  m.def("run_loadgen",
        [](const std::string& host, std::uint16_t port, std::int64_t capacity, std::size_t clients, std::uint64_t seed,
           std::int64_t course) {
          client::LoadReport r;
          {
            py::gil_scoped_release unlocked;
            r = client::run_loadgen(host, port, {capacity, clients, seed, course, true});
          }
          return report_to_dict(r);
        },
        py::arg("host"), py::arg("port"), py::arg("capacity"), py::arg("clients"), py::arg("seed") = 1,
        py::arg("course") = 1);
}
