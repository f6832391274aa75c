#include "halo/adapter.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "halo/errors.hpp"

namespace halo {

using nlohmann::json;

// ---------------------------------------------------------------------------
// transports

FdLink::FdLink(int read_fd, int write_fd, bool owns)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {}

FdLink::~FdLink() {
  if (owns_) {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
  }
}

void FdLink::send_line(const std::string& line) {
  std::string out = line;
  out.push_back('\n');
  std::size_t off = 0;
  while (off < out.size()) {
    ssize_t n = ::write(write_fd_, out.data() + off, out.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdLink::recv_line() {
  for (;;) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (!buffer_.empty()) {  // final unterminated line still counts
        std::string line;
        line.swap(buffer_);
        return line;
      }
      return std::nullopt;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void FdLink::close_write() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) {
    ::close(write_fd_);
    write_fd_ = -1;
  }
}

SpawnedAdapter::SpawnedAdapter(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ValidationError("SpawnedAdapter: empty argv");
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw TransportError("pipe() failed");
  int pid = ::fork();
  if (pid < 0) throw TransportError("fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  pid_ = pid;
  ::close(to_child[0]);
  ::close(from_child[1]);
  link_ = std::make_unique<FdLink>(from_child[0], to_child[1]);
}

SpawnedAdapter::~SpawnedAdapter() {
  if (pid_ > 0) {
    link_.reset();  // closing the pipes lets a well-behaved child exit
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
  }
}

int SpawnedAdapter::wait() {
  if (pid_ <= 0) return -1;
  link_->close_write();
  int status = 0;
  if (::waitpid(pid_, &status, 0) < 0) return -1;
  pid_ = -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::unique_ptr<AdapterLink> connect_tcp(const std::string& host, int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ValidationError("connect_tcp: host must be a dotted IPv4 address");
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("connect() to " + host + ":" + std::to_string(port) + " failed");
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_unique<FdLink>(fd, fd);
}

std::unique_ptr<AdapterLink> accept_tcp_once(int port) {
  int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(srv);
    throw TransportError("bind() on port " + std::to_string(port) + " failed");
  }
  if (::listen(srv, 1) != 0) {
    ::close(srv);
    throw TransportError("listen() failed");
  }
  int conn = ::accept(srv, nullptr, nullptr);
  ::close(srv);
  if (conn < 0) throw TransportError("accept() failed");
  int nd = 1;
  ::setsockopt(conn, IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
  return std::make_unique<FdLink>(conn, conn);
}

// ---------------------------------------------------------------------------
// protocol helpers

namespace {

json parse_message(const std::string& line) {
  json msg = json::parse(line, nullptr, false);
  if (msg.is_discarded() || !msg.is_object() || !msg.contains("type") ||
      !msg["type"].is_string())
    throw TransportError("malformed protocol line: " + line.substr(0, 200));
  return msg;
}

json expect_message(AdapterLink& link, const char* expected_what) {
  auto line = link.recv_line();
  if (!line)
    throw TransportError(std::string("stream closed while waiting for ") + expected_what);
  json msg = parse_message(*line);
  if (msg["type"] == "error")
    throw TransportError("peer refused: " + msg.value("message", std::string("unspecified")));
  return msg;
}

}  // namespace

// ---------------------------------------------------------------------------
// controller side

Trajectory run_halo_external(AdapterLink& link, const ObserverCalibration& cal,
                             const ControllerConfig& cfg, const RectifierSpec& rect,
                             std::string* error_out) {
  cfg.validate();
  rect.validate();
  cal.validate();

  Trajectory traj;
  traj.d = 0;  // no simulated state in external mode
  ControllerState ctl;

  try {
    link.send_line(json{{"type", "hello"}, {"version", kProtocolVersion}}.dump());
    for (;;) {
      if (ctl.step >= cfg.max_steps) {
        traj.status = RunStatus::kHardLimit;
        break;
      }
      json msg = expect_message(link, "a step message");
      if (msg["type"] != "step" || !msg.contains("entropy") || !msg["entropy"].is_number() ||
          !msg.contains("finished") || !msg["finished"].is_boolean())
        throw TransportError("expected a step message, got: " + msg.dump());
      const double entropy = msg["entropy"].get<double>();
      const bool finished = msg["finished"].get<bool>();

      ctl.step += 1;
      const double lam_hat = drift_proxy(entropy, cal);
      ctl.omega = update_uncertainty(ctl.omega, lam_hat, cfg);

      if (finished) {
        traj.per_step.push_back(StepRecord{entropy, lam_hat, ctl.omega, StepEvent::kTerminate});
        traj.status = RunStatus::kFinished;
        break;
      }

      if (check_stability(ctl.omega, cfg.psi) == Regime::kCritical) {
        link.send_line(json{{"type", "rectify"}, {"template", rect.template_text}}.dump());
        json ack = expect_message(link, "an anchor message");
        if (ack["type"] != "anchor" || !ack.contains("summary") || !ack["summary"].is_string())
          throw TransportError("expected an anchor message, got: " + ack.dump());
        ctl.omega = 0.0;
        ResetInfo info;
        info.step = ctl.step;
        info.summary = ack["summary"].get<std::string>();
        ctl.resets.push_back(info);
        traj.per_step.push_back(StepRecord{entropy, lam_hat, 0.0, StepEvent::kReset});
        traj.resets.push_back(info);
        if (detect_oscillation(ctl, cfg)) {
          traj.status = RunStatus::kOscillation;
          break;
        }
      } else {
        traj.per_step.push_back(StepRecord{entropy, lam_hat, ctl.omega, StepEvent::kStep});
        traj.dynamics_steps += 1;
        link.send_line(json{{"type", "continue"}}.dump());
      }
    }
  } catch (const TransportError& e) {
    traj.status = RunStatus::kTransportError;
    if (error_out) *error_out = e.what();
  }
  return traj;
}

// ---------------------------------------------------------------------------
// generator side (scripted stub)

int run_adapter_stub(AdapterLink& link, const StubScript& script) {
  auto hello_line = link.recv_line();
  if (!hello_line) return 0;
  json hello = parse_message(*hello_line);
  if (hello["type"] != "hello" || !hello.contains("version") ||
      !hello["version"].is_number_integer() ||
      hello["version"].get<int>() != kProtocolVersion) {
    link.send_line(json{{"type", "error"},
                        {"message", "unsupported protocol version"}}.dump());
    return 0;
  }

  int sent = 0;
  int resets = 0;
  auto send_step = [&](double entropy, bool finished) -> bool {
    if (script.fail_after >= 0 && sent >= script.fail_after) return false;  // simulate crash
    link.send_line(json{{"type", "step"}, {"entropy", entropy}, {"finished", finished}}.dump());
    ++sent;
    return true;
  };

  for (double entropy : script.entropies) {
    if (!send_step(entropy, false)) return sent;
    auto reply_line = link.recv_line();
    if (!reply_line) return sent;  // controller hung up (hard limit etc.)
    json reply = parse_message(*reply_line);
    if (reply["type"] == "rectify") {
      ++resets;
      const std::string summary = script.anchor_fixed
                                      ? *script.anchor_fixed
                                      : script.anchor_prefix + "-" + std::to_string(resets);
      link.send_line(json{{"type", "anchor"}, {"summary", summary}}.dump());
      // resume the series unprompted, per protocol
    } else if (reply["type"] != "continue") {
      return sent;  // unknown instruction: refuse to guess
    }
  }
  send_step(0.0, true);
  return sent;
}

}  // namespace halo
