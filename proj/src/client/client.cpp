#include "autodb/client/client.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <utility>

#include "autodb/error.hpp"

namespace autodb::client {

ClientSession ClientSession::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw DbError(ErrorCode::kIo, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::string why = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      why = std::strerror(errno);
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return ClientSession(fd);
    }
    why = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw DbError(ErrorCode::kIo, "cannot connect to " + host + ":" + service + ": " + why);
}

ClientSession::ClientSession(ClientSession&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

ClientSession& ClientSession::operator=(ClientSession&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

ClientSession::~ClientSession() { close(); }

void ClientSession::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

net::WireResponse ClientSession::execute(std::string_view sql) {
  if (fd_ < 0) throw DbError(ErrorCode::kConnectionClosed, "session is closed");
  const std::string frame = net::encode_frame(sql, net::kMaxRequestPayload);
  try {
    net::write_all(fd_, frame);
    return net::decode_response(net::read_frame(net::socket_source(fd_), net::kMaxResponsePayload));
  } catch (const DbError& e) {
    close();
    throw;
  }
}

}  // namespace autodb::client
