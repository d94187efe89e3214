// Child-process classifier speaking line-delimited JSON:
//   server -> {"type":"hello","version":1,"labels":[...]}
//   client -> {"type":"predict","id":N,"width":W,"height":H,"channels":3,"pixels":"<b64 f32le>"}
//   server -> {"type":"probs","id":N,"probs":[...]} | {"type":"error","id":N,"message":"..."}
// The client closes its write side to shut the server down.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <sodium.h>

#include "limescope/classify.hpp"
#include "limescope/error.hpp"

extern char** environ;

namespace limescope {

namespace {

constexpr int kProtocolVersion = 1;

// Reads one '\n'-terminated line into `line`; false on EOF. Throws `timeout_kind` on timeout.
bool read_line_from(int fd, std::string& buffer, std::string& line, int timeout_ms, ErrorKind timeout_kind) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    const auto newline = buffer.find('\n');
    if (newline != std::string::npos) {
      line = buffer.substr(0, newline);
      buffer.erase(0, newline + 1);
      return true;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail(timeout_kind, "timed out waiting for classifier reply");
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::TransportFailure, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t got = ::read(fd, chunk, sizeof(chunk));
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorKind::TransportFailure, std::string("read: ") + std::strerror(errno));
    }
    if (got == 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(got));
  }
}

nlohmann::json parse_message(const std::string& line) {
  try {
    auto msg = nlohmann::json::parse(line);
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      fail(ErrorKind::ProtocolViolation, "message without a type: " + line);
    }
    return msg;
  } catch (const nlohmann::json::parse_error&) {
    fail(ErrorKind::ProtocolViolation, "unparsable message: " + line);
  }
}

void reap(int pid) {
  if (pid <= 0) return;
  for (int i = 0; i < 200; ++i) {
    int status = 0;
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid || r < 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
}

}  // namespace

std::string encode_pixels(const Image& img) {
  if (sodium_init() < 0) fail(ErrorKind::TransportFailure, "libsodium failed to initialize");
  std::vector<unsigned char> raw(img.size() * sizeof(float));
  for (std::size_t i = 0; i < img.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(img.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(raw.data() + i * 4, &bits, 4);
  }
  std::string out(sodium_base64_encoded_len(raw.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), raw.data(), raw.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<float> decode_pixels(std::string_view base64) {
  if (sodium_init() < 0) fail(ErrorKind::TransportFailure, "libsodium failed to initialize");
  std::vector<unsigned char> raw(base64.size() / 4 * 3 + 3);
  std::size_t length = 0;
  if (sodium_base642bin(raw.data(), raw.size(), base64.data(), base64.size(), nullptr, &length, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      length % 4 != 0) {
    fail(ErrorKind::ProtocolViolation, "invalid base64 pixel payload");
  }
  std::vector<float> out(length / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, raw.data() + i * 4, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

ExternalClassifier::ExternalClassifier(int pid, int fd, int timeout_ms)
    : pid_(pid), fd_(fd), timeout_ms_(timeout_ms) {}

ExternalClassifier::~ExternalClassifier() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
  }
  reap(pid_);
}

std::string ExternalClassifier::read_line() const {
  std::string line;
  if (!read_line_from(fd_, buffer_, line, timeout_ms_, ErrorKind::TransportFailure)) {
    fail(ErrorKind::TransportFailure, "classifier process closed its output");
  }
  return line;
}

void ExternalClassifier::write_all(const std::string& text) const {
  std::size_t sent = 0;
  while (sent < text.size()) {
    const ssize_t n = ::send(fd_, text.data() + sent, text.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::TransportFailure, std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::vector<ProbabilityVector> ExternalClassifier::predict(std::span<const Image> batch) const {
  if (batch.empty()) fail(ErrorKind::ShapeError, "predict needs a non-empty batch");
  std::lock_guard lock(mutex_);
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (const Image& original : batch) {
    const Image img = to_rgb(original);
    const std::uint64_t id = next_id_++;
    const nlohmann::json request{{"type", "predict"},     {"id", id},
                                 {"width", img.width()},  {"height", img.height()},
                                 {"channels", 3},         {"pixels", encode_pixels(img)}};
    write_all(request.dump() + "\n");

    const auto reply = parse_message(read_line());
    const auto type = reply["type"].get<std::string>();
    if (!reply.contains("id") || !reply["id"].is_number_integer()) {
      fail(ErrorKind::ProtocolViolation, "reply without an id");
    }
    if (type == "error") {
      fail(ErrorKind::TransportFailure, "classifier error: " + reply.value("message", std::string("(none)")));
    }
    if (type != "probs") fail(ErrorKind::ProtocolViolation, "unexpected reply type '" + type + "'");
    if (reply["id"].get<std::int64_t>() != static_cast<std::int64_t>(id)) {
      fail(ErrorKind::ProtocolViolation, "reply id does not match request id");
    }
    auto probs = reply.at("probs").get<std::vector<double>>();
    if (probs.size() != labels_.size()) {
      fail(ErrorKind::ShapeError, "probability vector length does not match label count");
    }
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) fail(ErrorKind::ProtocolViolation, "probabilities must be finite and >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-3) fail(ErrorKind::ProtocolViolation, "probabilities do not sum to 1");
    if (std::abs(sum - 1.0) > 1e-12) {
      for (double& p : probs) p /= sum;
    }
    out.push_back(std::move(probs));
  }
  return out;
}

std::unique_ptr<ExternalClassifier> connect_external(const std::vector<std::string>& command, int timeout_ms) {
  if (command.empty()) fail(ErrorKind::SpawnFailure, "empty command");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    fail(ErrorKind::SpawnFailure, std::string("socketpair: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

  std::vector<char*> argv;
  argv.reserve(command.size() + 1);
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    fail(ErrorKind::SpawnFailure, "cannot spawn '" + command[0] + "': " + std::strerror(rc));
  }

  std::unique_ptr<ExternalClassifier> client(new ExternalClassifier(pid, fds[0], timeout_ms));
  std::string line;
  if (!read_line_from(client->fd_, client->buffer_, line, timeout_ms, ErrorKind::HandshakeTimeout)) {
    fail(ErrorKind::SpawnFailure, "classifier process exited before the hello message");
  }
  const auto hello = parse_message(line);
  if (hello["type"] != "hello") fail(ErrorKind::ProtocolViolation, "first message must be hello");
  if (hello.value("version", 0) != kProtocolVersion) {
    fail(ErrorKind::ProtocolViolation, "unsupported protocol version");
  }
  try {
    client->labels_ = hello.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::ProtocolViolation, "hello labels must be a list of strings");
  }
  if (client->labels_.empty()) fail(ErrorKind::ProtocolViolation, "hello advertised no labels");
  return client;
}

}  // namespace limescope
