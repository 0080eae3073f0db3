#include "gsnav/protocol.hpp"

#include "gsnav/error.hpp"
#include "gsnav/image_io.hpp"

#include <fmt/format.h>

#include <arpa/inet.h>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace gsnav {

using nlohmann::json;

void LoopbackChannel::send(const json& msg) {
  if (auto reply = respond_(msg)) pending_.push_back(reply->dump());
}

std::optional<std::string> LoopbackChannel::receive(std::chrono::milliseconds) {
  if (pending_.empty()) return std::nullopt;
  std::string line = std::move(pending_.front());
  pending_.pop_front();
  return line;
}

FdChannel::~FdChannel() { close_fds(); }

void FdChannel::close_fds() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  read_fd_ = write_fd_ = -1;
}

void FdChannel::send(const json& msg) { send_line(msg.dump()); }

void FdChannel::send_line(const std::string& line) {
  if (write_fd_ < 0) throw TransportError("channel is closed");
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = is_socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                 : ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(fmt::format("write failed: {}", std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdChannel::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (read_fd_ < 0) throw TransportError("channel is closed");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{read_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(fmt::format("poll failed: {}", std::strerror(errno)));
    }
    if (r == 0) return std::nullopt;
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError(fmt::format("read failed: {}", std::strerror(errno)));
    }
    if (n == 0) throw TransportError("agent closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

PipeChannel::PipeChannel(const std::string& command) : FdChannel(-1, -1) {
  std::signal(SIGPIPE, SIG_IGN);
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0)
    throw TransportError(fmt::format("pipe failed: {}", std::strerror(errno)));
  pid_ = ::fork();
  if (pid_ < 0) throw TransportError(fmt::format("fork failed: {}", std::strerror(errno)));
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  write_fd_ = to_child[1];
  read_fd_ = from_child[0];
}

PipeChannel::~PipeChannel() {
  close_fds();
  if (pid_ <= 0) return;
  for (int i = 0; i < 200; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
}

SocketChannel::SocketChannel(int fd) : FdChannel(fd, fd) { is_socket_ = true; }

std::unique_ptr<SocketChannel> SocketChannel::connect(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(fmt::format("socket failed: {}", std::strerror(errno)));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw TransportError(fmt::format("bad address '{}'", host));
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int err = errno;
    ::close(fd);
    throw TransportError(fmt::format("connect to {}:{} failed: {}", host, port, std::strerror(err)));
  }
  return std::make_unique<SocketChannel>(fd);
}

TcpListener::TcpListener(int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw TransportError(fmt::format("socket failed: {}", std::strerror(errno)));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0) {
    const int err = errno;
    ::close(fd_);
    throw TransportError(fmt::format("cannot listen on port {}: {}", port, std::strerror(err)));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<SocketChannel> TcpListener::accept(std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (r <= 0) throw TransportError(fmt::format("no agent connected to port {} in time", port_));
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) throw TransportError(fmt::format("accept failed: {}", std::strerror(errno)));
  return std::make_unique<SocketChannel>(fd);
}

json observation_json(const std::optional<Frame>& frame) {
  if (!frame) return nullptr;
  json j = {{"width", frame->width}, {"height", frame->height}};
  if (!frame->rgb.empty()) j["rgb_png"] = base64_encode(encode_png_rgb(frame->rgb, frame->width, frame->height));
  if (!frame->semantic.empty())
    j["semantic_png"] = base64_encode(encode_png_gray16(frame->semantic, frame->width, frame->height));
  if (!frame->depth.empty()) j["depth_f32"] = base64_encode(encode_f32(frame->depth));
  return j;
}

std::optional<Frame> observation_from_json(const json& obs) {
  if (obs.is_null()) return std::nullopt;
  Frame f;
  try {
    f.width = obs.at("width").get<int>();
    f.height = obs.at("height").get<int>();
    if (obs.contains("rgb_png")) {
      const auto png = decode_png(base64_decode(obs["rgb_png"].get<std::string>()));
      for (auto v : png.samples) f.rgb.push_back(static_cast<float>(v) / 255.0f);
    }
    if (obs.contains("semantic_png")) {
      const auto png = decode_png(base64_decode(obs["semantic_png"].get<std::string>()));
      f.semantic.assign(png.samples.begin(), png.samples.end());
    }
    if (obs.contains("depth_f32")) {
      const auto bytes = base64_decode(obs["depth_f32"].get<std::string>());
      f.depth = decode_f32(bytes);
    }
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("bad observation: {}", e.what()));
  }
  return f;
}

json hello_message(std::size_t episodes) {
  return {{"type", "hello"}, {"protocol_version", kProtocolVersion}, {"episodes", episodes}};
}

json reset_message(const Episode& episode, const std::optional<Frame>& obs) {
  return {{"type", "reset"},
          {"episode_id", episode.episode_id},
          {"instruction", episode.instruction.text},
          {"obs", observation_json(obs)}};
}

json step_message(const StepResult& result) {
  json contacts = json::array();
  for (const auto& c : result.contact_events)
    contacts.push_back({{"instance_id", c.instance_id}, {"penetration_depth", c.penetration_depth}, {"t", c.t}});
  json j = {{"type", "step"}, {"obs", observation_json(result.observation)}, {"contacts", contacts}, {"done", result.done}};
  if (result.done_reason) j["done_reason"] = to_string(*result.done_reason);
  return j;
}

json close_message(const std::string& episode_id, const std::string& log_id) {
  return {{"type", "close"}, {"episode_id", episode_id}, {"log_id", log_id}};
}

json bye_message() { return {{"type", "bye"}}; }

void handshake(AgentChannel& channel, std::size_t episodes, std::chrono::milliseconds timeout) {
  channel.send(hello_message(episodes));
  const auto line = channel.receive(timeout);
  if (!line) throw ProtocolError("agent did not answer hello");
  json j;
  try {
    j = json::parse(*line);
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("hello reply is not JSON: {}", e.what()));
  }
  if (!j.is_object() || j.value("type", "") != "hello") throw ProtocolError("expected a hello reply");
  if (!j.contains("protocol_version") || !j["protocol_version"].is_number_integer())
    throw ProtocolError("hello reply lacks protocol_version");
  const int v = j["protocol_version"].get<int>();
  if (v != kProtocolVersion)
    throw VersionError(fmt::format("agent speaks protocol {}, harness speaks {}", v, kProtocolVersion));
}

}  // namespace gsnav
