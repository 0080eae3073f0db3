#pragma once

#include "gsnav/episode.hpp"
#include "gsnav/renderer.hpp"
#include "gsnav/sim.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>

namespace gsnav {

inline constexpr int kProtocolVersion = 1;

// One newline-delimited JSON conversation with an agent.
class AgentChannel {
 public:
  virtual ~AgentChannel() = default;
  // Throws TransportError when the peer is gone.
  virtual void send(const nlohmann::json& msg) = 0;
  // Next line from the agent, or nullopt on timeout. Throws TransportError on EOF.
  virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
};

// In-process agent: every message is handed to `respond`, whose reply (if
// any) becomes the next line received.
class LoopbackChannel : public AgentChannel {
 public:
  using Responder = std::function<std::optional<nlohmann::json>(const nlohmann::json&)>;
  explicit LoopbackChannel(Responder respond) : respond_(std::move(respond)) {}
  void send(const nlohmann::json& msg) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;

 private:
  Responder respond_;
  std::deque<std::string> pending_;
};

// Line framing over a pair of file descriptors.
class FdChannel : public AgentChannel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void send(const nlohmann::json& msg) override;
  void send_line(const std::string& line);
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;

 protected:
  void close_fds();
  int read_fd_ = -1;
  int write_fd_ = -1;
  bool is_socket_ = false;

 private:
  std::string buffer_;
};

// Runs `/bin/sh -c command` with its stdin/stdout as the channel.
class PipeChannel : public FdChannel {
 public:
  explicit PipeChannel(const std::string& command);
  ~PipeChannel() override;
  [[nodiscard]] pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
};

class SocketChannel : public FdChannel {
 public:
  explicit SocketChannel(int fd);
  // Client side, used by tests and tools.
  static std::unique_ptr<SocketChannel> connect(const std::string& host, int port);
};

// Loopback TCP listener. Port 0 picks a free port.
class TcpListener {
 public:
  explicit TcpListener(int port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  [[nodiscard]] int port() const { return port_; }
  // Throws TransportError when nobody connects in time.
  std::unique_ptr<SocketChannel> accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  int port_ = 0;
};

nlohmann::json observation_json(const std::optional<Frame>& frame);
// Inverse of observation_json (missing channels stay empty).
std::optional<Frame> observation_from_json(const nlohmann::json& obs);

nlohmann::json hello_message(std::size_t episodes);
nlohmann::json reset_message(const Episode& episode, const std::optional<Frame>& obs);
nlohmann::json step_message(const StepResult& result);
nlohmann::json close_message(const std::string& episode_id, const std::string& log_id);
nlohmann::json bye_message();

// Server side of the hello exchange. Throws VersionError or ProtocolError.
void handshake(AgentChannel& channel, std::size_t episodes, std::chrono::milliseconds timeout);

}  // namespace gsnav
