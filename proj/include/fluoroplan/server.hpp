#pragma once

// Transports for the session service.
//
// NdjsonServer: a TCP listener; each connection owns one Session and carries
// newline-delimited JSON requests and replies.
// HTTP: POST /rpc with one JSON request per body; sessions are keyed by the
// X-Session-Id header so the CLI and scripts can drive the same catalog.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "fluoroplan/service.hpp"

namespace fluoroplan {

class NdjsonServer {
 public:
  explicit NdjsonServer(ServiceOptions opts) : opts_(std::move(opts)) {}

  ~NdjsonServer() { stop(); }

  NdjsonServer(const NdjsonServer&) = delete;
  NdjsonServer& operator=(const NdjsonServer&) = delete;

  /// Binds 127.0.0.1:port (0 picks a free port) and returns the bound port.
  int bind(int port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(ErrorCode::IoError, std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        ::listen(listen_fd_, 16) < 0)
      throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(port) + ": " +
                                          std::strerror(errno));
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  /// Accepts connections until stop(); one thread per connection.
  void run() {
    running_ = true;
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (!running_) break;
        if (errno == EINTR) continue;
        break;
      }
      std::lock_guard lock(mu_);
      client_fds_.push_back(fd);
      workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
  }

  void stop() {
    running_ = false;
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto& t : workers)
      if (t.joinable()) t.join();
  }

 private:
  void serve_connection(int fd) {
    Session session(opts_);
    std::string buffer;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string reply = session.handle_line(line) + "\n";
        if (!send_all(fd, reply)) {
          release(fd);
          return;
        }
      }
    }
    release(fd);
  }

  void release(int fd) {
    std::lock_guard lock(mu_);
    std::erase(client_fds_, fd);
    ::close(fd);
  }

  static bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  ServiceOptions opts_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::mutex mu_;
  std::vector<int> client_fds_;
  std::vector<std::thread> workers_;
};

/// Registers POST /rpc on an httplib server.
inline void mount_http_rpc(httplib::Server& server, ServiceOptions opts) {
  struct Registry {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<Session>> sessions;
  };
  auto registry = std::make_shared<Registry>();
  server.Post("/rpc", [registry, opts](const httplib::Request& req, httplib::Response& res) {
    const std::string key =
        req.has_header("X-Session-Id") ? req.get_header_value("X-Session-Id") : "default";
    std::shared_ptr<Session> session;
    {
      std::lock_guard lock(registry->mu);
      auto& slot = registry->sessions[key];
      if (!slot) slot = std::make_shared<Session>(opts);
      session = slot;
    }
    res.set_content(session->handle_line(req.body), "application/json");
  });
}

}  // namespace fluoroplan
