#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "minicits/error.hpp"

namespace minicits {

/// Newline-delimited JSON over TCP. Each connection is served by its own
/// thread; requests on one connection are answered strictly in order.
class LineServer {
 public:
  using Handler = std::function<std::string(const std::string& line)>;

  // A request line longer than this closes the connection.
  static constexpr std::size_t kMaxLine = 1 << 20;

  LineServer(Handler handler, std::uint16_t port, const std::string& bind_address = "127.0.0.1")
      : handler_(std::move(handler)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(Errc::io, "socket", std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw Error(Errc::validation, "bind_address", "not an IPv4 address: " + bind_address);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 16) < 0) {
      const std::string msg = std::strerror(errno);
      ::close(fd_);
      throw Error(Errc::io, "port " + std::to_string(port), msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  ~LineServer() { stop(); }

  std::uint16_t port() const { return port_; }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (acceptor_.joinable()) acceptor_.join();
    ::close(fd_);
    std::lock_guard lock(mu_);
    for (auto& c : clients_) ::shutdown(c.fd, SHUT_RDWR);
    for (auto& c : clients_) {
      if (c.thread.joinable()) c.thread.join();
      ::close(c.fd);
    }
    clients_.clear();
  }

 private:
  struct Client {
    int fd = -1;
    std::thread thread;
  };

  void accept_loop() {
    while (!stopping_) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int cfd = ::accept(fd_, nullptr, nullptr);
      if (cfd < 0) continue;
      std::lock_guard lock(mu_);
      if (stopping_) {
        ::close(cfd);
        break;
      }
      auto& c = clients_.emplace_back();
      c.fd = cfd;
      c.thread = std::thread([this, cfd] { serve(cfd); });
    }
  }

  void serve(int cfd) {
    std::string buf;
    char chunk[4096];
    while (!stopping_) {
      const ssize_t n = ::recv(cfd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!send_all(cfd, handler_(line) + "\n")) return;
      }
      if (buf.size() > kMaxLine) {
        send_all(cfd, "{\"ok\":false,\"error\":\"parse_error\",\"detail\":\"line too long\"}\n");
        break;
      }
    }
    ::shutdown(cfd, SHUT_RDWR);
  }

  static bool send_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  Handler handler_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::list<Client> clients_;
};

}  // namespace minicits
