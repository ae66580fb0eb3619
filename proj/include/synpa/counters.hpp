#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace synpa {

/// The four per-thread dispatch-stage events read for one quantum. Values are
/// kept exactly as the PMU reported them; skew between the stall counters and
/// the cycle counter is handled by characterize().
struct RawCounterSample {
  std::uint64_t cpu_cycles = 0;
  std::uint64_t inst_spec = 0;
  std::uint64_t stall_frontend = 0;
  std::uint64_t stall_backend = 0;
  std::string thread_id;
  std::uint64_t quantum_index = 0;

  friend bool operator==(const RawCounterSample&, const RawCounterSample&) = default;
};

enum class TraceMode { kTrace, kIsolated, kPaired };

struct TraceHeader {
  static constexpr int kVersion = 1;

  int version = kVersion;
  unsigned dispatch_width = 4;
  double quantum_ms = 100.0;
  std::vector<std::string> threads;
  /// kTrace for plain counter traces; profiles carry "mode" in the header and a
  /// trailing committed_instructions column.
  TraceMode mode = TraceMode::kTrace;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TraceRow {
  RawCounterSample sample;
  std::optional<std::uint64_t> committed_instructions;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// A fully validated trace or profile file.
struct TraceDocument {
  TraceHeader header;
  std::vector<TraceRow> rows;  // ordered by (quantum, roster position)

  std::uint64_t quantum_count() const;
};

TraceDocument parse_trace(std::istream& in);
TraceDocument read_trace_file(const std::filesystem::path& path);
void write_trace(std::ostream& out, const TraceDocument& doc);
void write_trace_file(const std::filesystem::path& path, const TraceDocument& doc);

/// Source of per-quantum counter samples. Single owner, polled from one thread.
class CounterProvider {
 public:
  virtual ~CounterProvider() = default;

  virtual const TraceHeader& header() const = 0;
  virtual std::uint64_t next_quantum() const = 0;

  /// Returns every sample of `quantum` and advances the cursor, or nullopt once
  /// the source is exhausted. Polling anything other than next_quantum() throws
  /// Errc::kOutOfOrderPoll.
  virtual std::optional<std::vector<RawCounterSample>> poll(std::uint64_t quantum) = 0;
};

class TraceProvider final : public CounterProvider {
 public:
  explicit TraceProvider(TraceDocument doc);

  const TraceHeader& header() const override { return doc_.header; }
  std::uint64_t next_quantum() const override { return next_; }
  std::optional<std::vector<RawCounterSample>> poll(std::uint64_t quantum) override;

 private:
  TraceDocument doc_;
  std::vector<std::size_t> quantum_begin_;  // row offsets, one past the end appended
  std::uint64_t next_ = 0;
};

TraceProvider open_trace(const std::filesystem::path& path);

/// Placeholder for a perf-event backed source. No OS binding ships; every poll
/// reports Errc::kUnsupportedPlatform.
class LiveProvider final : public CounterProvider {
 public:
  explicit LiveProvider(TraceHeader header) : header_(std::move(header)) {}

  const TraceHeader& header() const override { return header_; }
  std::uint64_t next_quantum() const override { return 0; }
  std::optional<std::vector<RawCounterSample>> poll(std::uint64_t quantum) override;

 private:
  TraceHeader header_;
};

}  // namespace synpa
