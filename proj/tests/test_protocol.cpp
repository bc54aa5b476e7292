#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "fake_server.hpp"
#include "lsopt/evolution.hpp"
#include "lsopt/genmodel.hpp"
#include "lsopt/oracle.hpp"
#include "lsopt/protocol.hpp"

using namespace lsopt;
using namespace std::chrono_literals;
namespace proto = lsopt::protocol;

namespace {

proto::EndpointAddress fake_endpoint(const std::string& mode, std::size_t len = 8,
                                     std::chrono::milliseconds timeout = 5000ms) {
  proto::EndpointAddress ep;
  ep.command = {LSOPT_FAKE_SERVER, mode, std::to_string(len)};
  ep.timeout = timeout;
  return ep;
}

proto::WireClient connect(const std::string& mode, std::size_t len = 8,
                          std::chrono::milliseconds timeout = 5000ms) {
  const auto ep = fake_endpoint(mode, len, timeout);
  return proto::WireClient(proto::open_transport(ep), ep.timeout);
}

OracleSpec external_oracle(const std::string& mode, std::size_t len = 8) {
  OracleSpec spec;
  spec.kind = OracleKind::External;
  spec.objective_names = {"onemax", "leading_ones"};
  spec.endpoint = fake_endpoint(mode, len);
  return spec;
}

std::vector<std::string> tokens(std::initializer_list<const char*> t) { return {t.begin(), t.end()}; }

/// One-connection TCP server on an ephemeral loopback port.
class TcpFake {
 public:
  explicit TcpFake(fake::Options o) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    REQUIRE(::listen(listen_fd_, 1) == 0);
    socklen_t n = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &n);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this, o] {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) return;
      std::FILE* in = ::fdopen(fd, "r");
      std::FILE* out = ::fdopen(::dup(fd), "w");
      fake::serve(in, out, o);
      std::fclose(in);
      std::fclose(out);
    });
  }
  ~TcpFake() {
    thread_.join();
    ::close(listen_fd_);
  }
  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }

 private:
  int listen_fd_ = -1;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("handshake and assess over a subprocess") {
  auto client = connect("normal");
  const auto& hello = client.handshake(std::vector<std::string>{"onemax", "leading_ones"});
  CHECK(hello.version == 1);
  CHECK(hello.fingerprint_len == 8);

  const auto r = client.assess(tokens({"11000000", "11111111"}));
  REQUIRE(r.scores.size() == 2);
  CHECK(r.scores[0] == std::vector<double>{0.25, 0.25});
  CHECK(r.scores[1] == std::vector<double>{1.0, 1.0});
  REQUIRE(r.fingerprints.size() == 2);
  CHECK(r.fingerprints[0] == std::vector<double>{1, 1, 0, 0, 0, 0, 0, 0});

  CHECK(client.assess({}).scores.empty());
}

TEST_CASE("requests before the handshake are rejected") {
  auto client = connect("normal");
  CHECK_THROWS_AS(client.assess(tokens({"1"})), ProtocolError);
}

TEST_CASE("objective mismatch at handshake is a configuration error") {
  auto client = connect("normal");
  CHECK_THROWS_AS(client.handshake(std::vector<std::string>{"qed", "sa"}), ConfigError);
}

TEST_CASE("bad hellos") {
  auto v2 = connect("bad-version");
  CHECK_THROWS_AS(v2.handshake(), ProtocolError);
  auto mute = connect("no-hello", 8, 200ms);
  CHECK_THROWS_AS(mute.handshake(), TransportError);
}

TEST_CASE("out-of-order responses are matched by id") {
  auto client = connect("reverse");
  client.handshake();
  const auto a = client.send_assess(tokens({"10000000"}));
  const auto b = client.send_assess(tokens({"11100000"}));
  const auto ra = client.wait_assess(a);
  const auto rb = client.wait_assess(b);
  CHECK(ra.scores[0][0] == 0.125);
  CHECK(rb.scores[0][0] == 0.375);
}

TEST_CASE("malformed responses are protocol errors") {
  for (const char* mode : {"unknown-id", "garbage", "short-rows", "bad-score", "error"}) {
    CAPTURE(mode);
    auto client = connect(mode);
    client.handshake();
    CHECK_THROWS_AS(client.assess(tokens({"10101010", "00000000"})), ProtocolError);
  }
}

TEST_CASE("fingerprint width must match the hello") {
  // The server echoes bits, so a token shorter than fingerprint_len is caught.
  auto client = connect("normal", 8);
  client.handshake();
  CHECK_THROWS_AS(client.assess(tokens({"101"})), ProtocolError);
}

TEST_CASE("timeouts and dead peers are transport errors") {
  auto silent = connect("silent", 8, 200ms);
  silent.handshake();
  CHECK_THROWS_AS(silent.assess(tokens({"10101010"})), TransportError);

  auto gone = connect("exit");
  gone.handshake();
  CHECK_THROWS_AS(gone.assess(tokens({"10101010"})), TransportError);

  proto::EndpointAddress missing;
  missing.command = {"/nonexistent/oracle-binary"};
  missing.timeout = 500ms;
  proto::WireClient client(proto::open_transport(missing), missing.timeout);
  CHECK_THROWS_AS(client.handshake(), TransportError);
}

TEST_CASE("endpoint address validation") {
  proto::EndpointAddress none;
  CHECK_THROWS_AS(proto::open_transport(none), ConfigError);
  proto::EndpointAddress both;
  both.command = {"x"};
  both.address = "127.0.0.1:1";
  CHECK_THROWS_AS(proto::open_transport(both), ConfigError);
  proto::EndpointAddress bad;
  bad.address = "no-port";
  CHECK_THROWS_AS(proto::open_transport(bad), ConfigError);
}

TEST_CASE("TCP transport") {
  TcpFake server({});
  proto::EndpointAddress ep;
  ep.address = server.address();
  proto::WireClient client(proto::open_transport(ep), 5000ms);
  client.handshake();
  const auto r = client.assess(tokens({"11110000"}));
  CHECK(r.scores[0] == std::vector<double>{0.5, 0.5});
}

TEST_CASE("external oracle debits only on success") {
  auto oracle = make_oracle(external_oracle("normal"));
  BudgetLedger ledger;
  const auto recs = oracle->assess(std::vector{Candidate::token("11110000"), Candidate::bitstring("11111111")},
                                   ledger, 1);
  REQUIRE(recs.size() == 2);
  CHECK(ledger.spent() == 2);
  CHECK(recs[0].fitness.value == 0.5);
  CHECK(recs[1].fitness.value == 1.0);
  CHECK(recs[0].fingerprint.binary());
  CHECK(recs[1].call_id == 1);

  CHECK_THROWS_AS(oracle->assess(std::vector{Candidate::real_vector({1.0})}, ledger, 1), UnsupportedDomain);

  auto failing = make_oracle(external_oracle("error"));
  BudgetLedger l2;
  CHECK_THROWS_AS(failing->assess(std::vector{Candidate::token("11110000")}, l2, 1), ProtocolError);
  CHECK(l2.spent() == 0);

  auto mismatched = external_oracle("normal");
  mismatched.objective_names = {"onemax"};
  CHECK_THROWS_AS(make_oracle(mismatched), ConfigError);
}

TEST_CASE("external oracle clamps out-of-range scores") {
  auto oracle = make_oracle(external_oracle("out-of-range"));
  BudgetLedger ledger;
  const auto recs = oracle->assess(std::vector{Candidate::token("00000000")}, ledger, 1);
  CHECK(recs[0].scores.values[0] == 1.0);
}

TEST_CASE("external generative model round-trips through encode/decode") {
  GenerativeModelSpec spec;
  spec.kind = ModelKind::External;
  spec.dim = 8;
  spec.endpoint = fake_endpoint("normal");
  auto model = make_model(spec);
  CHECK(model->spec().domain() == Domain::Token);

  const auto z = model->encode(Candidate::token("10110000"));
  CHECK(z.values == std::vector<double>{1, -1, 1, 1, -1, -1, -1, -1});
  const auto c = model->decode(z);
  CHECK(c.token_text() == "10110000");
  REQUIRE(c.supplied_fingerprint());
  CHECK(c.supplied_fingerprint()->values()[0] == 1.0);
}

TEST_CASE("evolution drives external model and oracle end to end") {
  GenerativeModelSpec mspec;
  mspec.kind = ModelKind::External;
  mspec.dim = 8;
  mspec.endpoint = fake_endpoint("normal");
  auto model = make_model(mspec);
  auto oracle = make_oracle(external_oracle("normal"));

  EvolutionConfig cfg;
  cfg.n_pop = 10;
  cfg.n_elite = 4;
  cfg.epochs = 3;
  cfg.plan.noises_per_elite = 5;
  cfg.plan.dedup = false;
  auto pre = Prescreener::knn(Ablation::Full, 0.35);
  const auto result = run_evolution(cfg, *model, *oracle, pre);
  CHECK(result.budget_spent == 30);
  CHECK(result.archive.size() == 30);
  CHECK(result.archive.back().candidate.domain() == Domain::Token);
}
