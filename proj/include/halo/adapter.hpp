#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "halo/controller.hpp"
#include "halo/types.hpp"

namespace halo {

// Wire protocol (newline-delimited JSON over a bidirectional byte stream,
// stdio pipes or TCP; one message per line):
//   controller -> generator : {"type":"hello","version":1}
//   generator  -> controller: {"type":"step","entropy":<num>,"finished":<bool>}
//   controller -> generator : {"type":"continue"}
//                           | {"type":"rectify","template":"<opaque text>"}
//   generator  -> controller: {"type":"anchor","summary":"<text>"}   (after rectify)
// After an anchor the generator resumes emitting step messages unprompted.
// A generator that receives an unsupported hello version must refuse the run
// ({"type":"error","message":...} then close). Any malformed line, unexpected
// type, or premature close is a transport failure.
inline constexpr int kProtocolVersion = 1;

// Minimal line-oriented peer. Implementations must flush on send.
class AdapterLink {
 public:
  virtual ~AdapterLink() = default;
  virtual void send_line(const std::string& line) = 0;
  // One line without the trailing newline; nullopt on clean EOF.
  virtual std::optional<std::string> recv_line() = 0;
};

// Link over POSIX file descriptors (pipes, sockets, stdio). Owns and closes
// the descriptors unless told otherwise.
class FdLink : public AdapterLink {
 public:
  FdLink(int read_fd, int write_fd, bool owns = true);
  ~FdLink() override;
  void send_line(const std::string& line) override;
  std::optional<std::string> recv_line() override;
  void close_write();  // half-close, signals EOF to the peer where supported

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  std::string buffer_;
};

// Spawned subprocess speaking the protocol on its stdio.
class SpawnedAdapter {
 public:
  explicit SpawnedAdapter(const std::vector<std::string>& argv);
  ~SpawnedAdapter();
  AdapterLink& link() { return *link_; }
  int wait();  // reaps the child, returns its exit status (-1 on signal)

 private:
  int pid_ = -1;
  std::unique_ptr<FdLink> link_;
};

// TCP client link (plain NDJSON, not HTTP).
std::unique_ptr<AdapterLink> connect_tcp(const std::string& host, int port);

// Blocks for one TCP connection on `port` (loopback) and returns its link.
std::unique_ptr<AdapterLink> accept_tcp_once(int port);

// Closed loop over an external generator. Observations arrive as step
// messages; the controller replies continue/rectify. The returned trajectory
// has no state vectors (d = 0): per-step observables, resets (with summary
// anchors) and status only. error_out, if given, receives the transport
// failure message when status == transport_error.
Trajectory run_halo_external(AdapterLink& link, const ObserverCalibration& cal,
                             const ControllerConfig& cfg, const RectifierSpec& rect,
                             std::string* error_out = nullptr);

// Scripted generator for integration tests: replays an entropy series, one
// step message per entry, and answers every rectify with a scripted anchor.
// When the series is exhausted it reports finished=true. fail_after >= 0
// closes the stream abruptly after that many step messages (transport-failure
// drills). Anchors are `anchor_prefix` + "-" + reset ordinal unless
// `anchor_fixed` is set (then every anchor is that exact string, which lets
// tests exercise the no-progress oscillation path).
struct StubScript {
  std::vector<double> entropies;
  std::string anchor_prefix = "anchor";
  std::optional<std::string> anchor_fixed;
  int fail_after = -1;
};

// Serves one run over `link`; returns the number of step messages sent.
// Exits early (without error) if the controller closes the stream first.
int run_adapter_stub(AdapterLink& link, const StubScript& script);

}  // namespace halo
