#include "lsopt/protocol.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "lsopt/errors.hpp"

namespace lsopt::protocol {

using nlohmann::json;

namespace {

std::string errno_text() { return std::strerror(errno); }

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

// ---------------------------------------------------------------------------
// FdTransport

FdTransport::FdTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {
  ignore_sigpipe();
}

FdTransport::~FdTransport() { close_fds(); }

void FdTransport::close_fds() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  read_fd_ = write_fd_ = -1;
}

void FdTransport::write_line(std::string_view line) {
  if (write_fd_ < 0) throw TransportError("transport is closed");
  std::string data(line);
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("write failed: " + errno_text());
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string FdTransport::read_line(std::chrono::milliseconds timeout) {
  if (read_fd_ < 0) throw TransportError("transport is closed");
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TransportError("timed out waiting for a response line");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError("poll failed: " + errno_text());
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("read failed: " + errno_text());
    }
    if (n == 0) throw TransportError("peer closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------
// SubprocessTransport

SubprocessTransport::Spawned SubprocessTransport::spawn(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ConfigError("subprocess command is empty");
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw TransportError("pipe failed: " + errno_text());
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed: " + errno_text());
  }
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw TransportError("fork failed: " + errno_text());
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    _exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return {from_child[0], to_child[1], static_cast<int>(pid)};
}

SubprocessTransport::SubprocessTransport(const std::vector<std::string>& argv)
    : SubprocessTransport(spawn(argv)) {}

SubprocessTransport::SubprocessTransport(Spawned s)
    : FdTransport(s.read_fd, s.write_fd), pid_(s.pid) {}

SubprocessTransport::~SubprocessTransport() {
  close_fds();  // EOF on the child's stdin asks it to exit
  if (pid_ <= 0) return;
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
    ::usleep(10000);
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
}

// ---------------------------------------------------------------------------
// TcpTransport

int TcpTransport::dial(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConfigError(fmt::format("expected host:port, got '{}'", address));
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw TransportError(fmt::format("cannot resolve {}: {}", address, ::gai_strerror(rc)));
  }
  int fd = -1;
  for (addrinfo* ai = found; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw TransportError(fmt::format("cannot connect to {}", address));
  return fd;
}

TcpTransport::TcpTransport(const std::string& address) : TcpTransport(dial(address)) {}

TcpTransport::TcpTransport(int fd) : FdTransport(fd, fd) {}

std::unique_ptr<LineTransport> open_transport(const EndpointAddress& where) {
  if (!where.command.empty() && !where.address.empty()) {
    throw ConfigError("endpoint must give either a command or an address, not both");
  }
  if (!where.command.empty()) return std::make_unique<SubprocessTransport>(where.command);
  if (!where.address.empty()) return std::make_unique<TcpTransport>(where.address);
  throw ConfigError("endpoint has neither a command nor an address");
}

// ---------------------------------------------------------------------------
// WireClient

namespace {

std::vector<double> number_row(const json& row, const char* what) {
  if (!row.is_array()) throw ProtocolError(fmt::format("{} row is not an array", what));
  std::vector<double> out;
  out.reserve(row.size());
  for (const auto& v : row) {
    if (!v.is_number()) throw ProtocolError(fmt::format("{} entry is not a number", what));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ProtocolError(fmt::format("{} entry is not finite", what));
    out.push_back(d);
  }
  return out;
}

std::vector<std::vector<double>> number_rows(const json& msg, const char* field,
                                             std::size_t rows, std::optional<std::size_t> width) {
  if (!msg.contains(field) || !msg[field].is_array()) {
    throw ProtocolError(fmt::format("response lacks array field '{}'", field));
  }
  const auto& arr = msg[field];
  if (arr.size() != rows) {
    throw ProtocolError(
        fmt::format("'{}' has {} rows, expected {}", field, arr.size(), rows));
  }
  std::vector<std::vector<double>> out;
  out.reserve(rows);
  for (const auto& row : arr) {
    auto r = number_row(row, field);
    if (width && r.size() != *width) {
      throw ProtocolError(
          fmt::format("'{}' row has length {}, expected {}", field, r.size(), *width));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

WireClient::WireClient(std::unique_ptr<LineTransport> transport, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {
  if (!transport_) throw InvalidInput("WireClient needs a transport");
}

const HelloInfo& WireClient::handshake(std::optional<std::vector<std::string>> expected) {
  transport_->write_line(json{{"type", "hello"}, {"version", kVersion}}.dump());
  json msg;
  try {
    msg = json::parse(transport_->read_line(timeout_));
  } catch (const json::parse_error& e) {
    throw ProtocolError(fmt::format("malformed hello: {}", e.what()));
  }
  if (!msg.is_object() || msg.value("type", "") != "hello") {
    throw ProtocolError("expected a hello message");
  }
  if (!msg.contains("version") || !msg["version"].is_number_integer() ||
      msg["version"].get<int>() != kVersion) {
    throw ProtocolError("unsupported protocol version");
  }
  HelloInfo info;
  info.version = kVersion;
  if (!msg.contains("objectives") || !msg["objectives"].is_array()) {
    throw ProtocolError("hello lacks objectives");
  }
  for (const auto& o : msg["objectives"]) {
    if (!o.is_string()) throw ProtocolError("objective names must be strings");
    info.objectives.push_back(o.get<std::string>());
  }
  if (!msg.contains("fingerprint_len") || !msg["fingerprint_len"].is_number_unsigned()) {
    throw ProtocolError("hello lacks fingerprint_len");
  }
  info.fingerprint_len = msg["fingerprint_len"].get<std::size_t>();
  if (expected && *expected != info.objectives) {
    throw ConfigError(fmt::format("server objectives [{}] do not match configured [{}]",
                                  fmt::join(info.objectives, ","), fmt::join(*expected, ",")));
  }
  hello_ = std::move(info);
  handshaken_ = true;
  return hello_;
}

void WireClient::require_handshake() const {
  if (!handshaken_) throw ProtocolError("handshake has not been performed");
}

std::uint64_t WireClient::send(json request, std::string expected_type, std::size_t rows) {
  require_handshake();
  const std::uint64_t id = next_id_++;
  request["id"] = id;
  transport_->write_line(request.dump());
  outstanding_.emplace(id, Pending{std::move(expected_type), rows});
  return id;
}

json WireClient::wait(std::uint64_t id) {
  const auto pending = outstanding_.find(id);
  if (pending == outstanding_.end()) {
    throw InvalidInput(fmt::format("request {} is not outstanding", id));
  }
  while (!arrived_.contains(id)) {
    json msg;
    try {
      msg = json::parse(transport_->read_line(timeout_));
    } catch (const json::parse_error& e) {
      throw ProtocolError(fmt::format("malformed response: {}", e.what()));
    }
    if (!msg.is_object() || !msg.contains("id") || !msg["id"].is_number_unsigned()) {
      throw ProtocolError("response lacks a numeric id");
    }
    const auto got = msg["id"].get<std::uint64_t>();
    if (!outstanding_.contains(got) || arrived_.contains(got)) {
      throw ProtocolError(fmt::format("response with unknown id {}", got));
    }
    arrived_.emplace(got, std::move(msg));
  }
  json msg = std::move(arrived_.at(id));
  arrived_.erase(id);
  const Pending p = pending->second;
  outstanding_.erase(pending);

  const std::string type = msg.value("type", "");
  if (type == "error") {
    throw ProtocolError(fmt::format("server error for request {}: {}", id,
                                    msg.value("message", std::string("(no message)"))));
  }
  if (type != p.expected_type) {
    throw ProtocolError(
        fmt::format("expected '{}' response for request {}, got '{}'", p.expected_type, id, type));
  }
  return msg;
}

std::uint64_t WireClient::send_assess(std::span<const std::string> tokens) {
  json req{{"type", "assess"}, {"candidates", json::array()}};
  for (const auto& t : tokens) req["candidates"].push_back(t);
  return send(std::move(req), "result", tokens.size());
}

AssessResult WireClient::wait_assess(std::uint64_t id) {
  const std::size_t rows = outstanding_.contains(id) ? outstanding_.at(id).rows : 0;
  const json msg = wait(id);
  AssessResult out;
  out.scores = number_rows(msg, "scores", rows, hello_.objectives.size());
  out.fingerprints = number_rows(msg, "fingerprints", rows, hello_.fingerprint_len);
  return out;
}

AssessResult WireClient::assess(std::span<const std::string> tokens) {
  require_handshake();
  if (tokens.empty()) return {};
  return wait_assess(send_assess(tokens));
}

std::vector<std::vector<double>> WireClient::encode(std::span<const std::string> tokens) {
  require_handshake();
  if (tokens.empty()) return {};
  json req{{"type", "encode"}, {"candidates", json::array()}};
  for (const auto& t : tokens) req["candidates"].push_back(t);
  const json msg = wait(send(std::move(req), "latents", tokens.size()));
  return number_rows(msg, "latents", tokens.size(), std::nullopt);
}

DecodeResult WireClient::decode(std::span<const std::vector<double>> latents) {
  require_handshake();
  if (latents.empty()) return {};
  json req{{"type", "decode"}, {"latents", json::array()}};
  for (const auto& z : latents) req["latents"].push_back(z);
  const json msg = wait(send(std::move(req), "candidates", latents.size()));
  DecodeResult out;
  if (!msg.contains("candidates") || !msg["candidates"].is_array() ||
      msg["candidates"].size() != latents.size()) {
    throw ProtocolError("decode response candidates are not row-aligned");
  }
  for (const auto& c : msg["candidates"]) {
    if (!c.is_string()) throw ProtocolError("decoded candidates must be strings");
    out.candidates.push_back(c.get<std::string>());
  }
  out.fingerprints = number_rows(msg, "fingerprints", latents.size(), hello_.fingerprint_len);
  return out;
}

}  // namespace lsopt::protocol
