#pragma once

// Client side of the newline-delimited JSON assessment protocol.
//
//   -> {"type":"hello","version":1}
//   <- {"type":"hello","version":1,"objectives":[...],"fingerprint_len":N}
//   -> {"type":"assess","id":I,"candidates":["tok", ...]}
//   <- {"type":"result","id":I,"scores":[[...],...],"fingerprints":[[0,1,...],...]}
//   <- {"type":"error","id":I,"message":"..."}
//
// Generative back-ends additionally answer
//   -> {"type":"encode","id":I,"candidates":["tok", ...]}
//   <- {"type":"latents","id":I,"latents":[[...],...]}
//   -> {"type":"decode","id":I,"latents":[[...],...]}
//   <- {"type":"candidates","id":I,"candidates":["tok",...],"fingerprints":[[...],...]}
//
// Responses are matched to requests by id and may arrive in any order.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lsopt::protocol {

inline constexpr int kVersion = 1;

/// A bidirectional line-oriented byte stream.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  /// Writes `line` plus a newline. Throws TransportError.
  virtual void write_line(std::string_view line) = 0;
  /// Blocks until a full line arrives. Throws TransportError on EOF or timeout.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// Shared buffered reader/writer over POSIX file descriptors.
class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd);
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line(std::chrono::milliseconds timeout) override;

 protected:
  void close_fds();

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::string buffer_;
};

/// Launches `argv` and talks to it over its stdin/stdout.
class SubprocessTransport final : public FdTransport {
 public:
  explicit SubprocessTransport(const std::vector<std::string>& argv);
  ~SubprocessTransport() override;

 private:
  struct Spawned {
    int read_fd;
    int write_fd;
    int pid;
  };
  static Spawned spawn(const std::vector<std::string>& argv);
  explicit SubprocessTransport(Spawned s);
  int pid_ = -1;
};

class TcpTransport final : public FdTransport {
 public:
  /// `address` is "host:port".
  explicit TcpTransport(const std::string& address);

 private:
  static int dial(const std::string& address);
  explicit TcpTransport(int fd);
};

/// Where an external service lives: a command line to spawn or a TCP address.
struct EndpointAddress {
  std::vector<std::string> command;
  std::string address;
  std::chrono::milliseconds timeout{30000};
};

std::unique_ptr<LineTransport> open_transport(const EndpointAddress& where);

struct HelloInfo {
  int version = 0;
  std::vector<std::string> objectives;
  std::size_t fingerprint_len = 0;
};

struct AssessResult {
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<double>> fingerprints;
};

struct DecodeResult {
  std::vector<std::string> candidates;
  std::vector<std::vector<double>> fingerprints;
};

class WireClient {
 public:
  WireClient(std::unique_ptr<LineTransport> transport, std::chrono::milliseconds timeout);

  /// Exchanges hellos. When `expected_objectives` is given, a mismatch with the
  /// server's declared objectives raises ConfigError.
  const HelloInfo& handshake(std::optional<std::vector<std::string>> expected_objectives = {});
  const HelloInfo& hello() const { return hello_; }

  /// Pipelined form: send now, collect later.
  std::uint64_t send_assess(std::span<const std::string> tokens);
  AssessResult wait_assess(std::uint64_t id);
  AssessResult assess(std::span<const std::string> tokens);

  std::vector<std::vector<double>> encode(std::span<const std::string> tokens);
  DecodeResult decode(std::span<const std::vector<double>> latents);

 private:
  std::uint64_t send(nlohmann::json request, std::string expected_type, std::size_t rows);
  nlohmann::json wait(std::uint64_t id);
  void require_handshake() const;

  struct Pending {
    std::string expected_type;
    std::size_t rows = 0;
  };

  std::unique_ptr<LineTransport> transport_;
  std::chrono::milliseconds timeout_;
  HelloInfo hello_;
  bool handshaken_ = false;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, Pending> outstanding_;
  std::map<std::uint64_t, nlohmann::json> arrived_;
};

}  // namespace lsopt::protocol
