#pragma once

#include <fcntl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rialto/mpc/frames.hpp"

namespace rialto::mpc {

struct Envelope {
  ActorId from = 0;
  Frame frame;
};

/// Point-to-point, ordered, reliable delivery between a fixed set of
/// actors. `receive` scans senders in ascending id order, which fixes the
/// delivery order and keeps runs deterministic.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(ActorId from, ActorId to, const Frame& frame) = 0;
  virtual std::optional<Envelope> receive(ActorId to) = 0;
  virtual std::size_t actors() const = 0;
  virtual std::string name() const = 0;
};

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(std::size_t actors) : n_(actors), queues_(actors * actors) {}

  void send(ActorId from, ActorId to, const Frame& frame) override {
    check(from, to);
    queues_[to * n_ + from].push_back(encode_frame(frame));
  }

  std::optional<Envelope> receive(ActorId to) override {
    for (ActorId from = 0; from < n_; ++from) {
      auto& q = queues_[to * n_ + from];
      if (q.empty()) continue;
      Bytes raw = std::move(q.front());
      q.pop_front();
      auto f = take_frame(raw);
      if (!f) throw ProtocolAbort("in-process transport: partial frame");
      return Envelope{from, std::move(*f)};
    }
    return std::nullopt;
  }

  std::size_t actors() const override { return n_; }
  std::string name() const override { return "in-process"; }

 private:
  void check(ActorId from, ActorId to) const {
    if (from >= n_ || to >= n_) throw ParameterError("transport: unknown actor");
  }

  std::size_t n_;
  std::vector<std::deque<Bytes>> queues_;
};

/// Same frames over AF_UNIX socket pairs, one per actor pair. Sockets are
/// non-blocking; bytes the kernel won't take yet wait in a user-space
/// buffer and are flushed on every send and receive.
class LoopbackSocketTransport final : public Transport {
 public:
  explicit LoopbackSocketTransport(std::size_t actors) : n_(actors), links_(actors * actors) {
    for (ActorId a = 0; a < n_; ++a) {
      for (ActorId b = a + 1; b < n_; ++b) {
        int fds[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
          throw std::runtime_error(std::string("socketpair: ") + std::strerror(errno));
        for (int fd : fds) ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
        link(a, b).fd = fds[0];
        link(b, a).fd = fds[1];
      }
    }
  }

  LoopbackSocketTransport(const LoopbackSocketTransport&) = delete;
  LoopbackSocketTransport& operator=(const LoopbackSocketTransport&) = delete;

  ~LoopbackSocketTransport() override {
    for (auto& l : links_)
      if (l.fd >= 0) ::close(l.fd);
  }

  void send(ActorId from, ActorId to, const Frame& frame) override {
    if (from >= n_ || to >= n_ || from == to) throw ParameterError("transport: bad endpoints");
    auto& l = link(from, to);
    auto raw = encode_frame(frame);
    l.outgoing.insert(l.outgoing.end(), raw.begin(), raw.end());
    flush_all();
  }

  std::optional<Envelope> receive(ActorId to) override {
    flush_all();
    for (ActorId from = 0; from < n_; ++from) {
      if (from == to) continue;
      // The receiving end of (from -> to) is link(to, from).
      auto& l = link(to, from);
      drain(l);
      if (auto f = take_frame(l.incoming)) return Envelope{from, std::move(*f)};
    }
    return std::nullopt;
  }

  std::size_t actors() const override { return n_; }
  std::string name() const override { return "loopback-socket"; }

 private:
  struct Link {
    int fd = -1;
    Bytes outgoing;
    Bytes incoming;
  };

  Link& link(ActorId self, ActorId peer) { return links_[self * n_ + peer]; }

  void flush_all() {
    for (auto& l : links_) {
      while (!l.outgoing.empty()) {
        const ssize_t n = ::send(l.fd, l.outgoing.data(), l.outgoing.size(), MSG_NOSIGNAL);
        if (n < 0) {
          if (errno == EAGAIN || errno == EWOULDBLOCK) break;
          throw std::runtime_error(std::string("socket send: ") + std::strerror(errno));
        }
        l.outgoing.erase(l.outgoing.begin(), l.outgoing.begin() + n);
      }
    }
  }

  static void drain(Link& l) {
    std::uint8_t buf[1 << 16];
    for (;;) {
      const ssize_t n = ::recv(l.fd, buf, sizeof buf, 0);
      if (n > 0) {
        l.incoming.insert(l.incoming.end(), buf, buf + n);
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
      if (n == 0) return;
      throw std::runtime_error(std::string("socket recv: ") + std::strerror(errno));
    }
  }

  std::size_t n_;
  std::vector<Link> links_;
};

enum class TransportKind { in_process, loopback_socket };

inline std::unique_ptr<Transport> make_transport(TransportKind kind, std::size_t actors) {
  if (kind == TransportKind::loopback_socket) return std::make_unique<LoopbackSocketTransport>(actors);
  return std::make_unique<InProcessTransport>(actors);
}

}  // namespace rialto::mpc
