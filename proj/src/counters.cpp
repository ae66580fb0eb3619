#include "synpa/counters.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "json.hpp"
#include "synpa/error.hpp"

namespace synpa {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kColumns = "quantum,thread,cpu_cycles,inst_spec,stall_frontend,stall_backend";
constexpr std::string_view kProfileColumn = "committed_instructions";

[[noreturn]] void fail_at(Errc code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::uint64_t parse_count(std::string_view field, std::size_t line, const char* name) {
  std::uint64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    fail_at(Errc::kParse, line, std::string("field '") + name + "' is not a non-negative integer: '" +
                                    std::string(field) + "'");
  }
  return value;
}

std::string_view mode_name(TraceMode mode) {
  switch (mode) {
    case TraceMode::kIsolated: return "isolated";
    case TraceMode::kPaired: return "paired";
    case TraceMode::kTrace: break;
  }
  return "trace";
}

TraceHeader parse_header(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_at(Errc::kParse, 1, std::string("header is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail_at(Errc::kParse, 1, "header must be a JSON object");

  TraceHeader h;
  try {
    if (!j.contains("version") || !j["version"].is_number_integer()) {
      fail_at(Errc::kParse, 1, "header lacks an integer 'version'");
    }
    h.version = j["version"].get<int>();
    if (h.version != TraceHeader::kVersion) {
      throw Error(Errc::kSchemaVersion, "trace version " + std::to_string(h.version) + ", expected " +
                                            std::to_string(TraceHeader::kVersion));
    }
    const auto width = j.value("dispatch_width", 4);
    if (width < 1) fail_at(Errc::kParse, 1, "dispatch_width must be >= 1");
    h.dispatch_width = static_cast<unsigned>(width);
    h.quantum_ms = j.value("quantum_ms", 100.0);
    if (!(h.quantum_ms > 0.0) || !std::isfinite(h.quantum_ms)) fail_at(Errc::kParse, 1, "quantum_ms must be > 0");
    if (!j.contains("threads") || !j["threads"].is_array()) fail_at(Errc::kParse, 1, "header lacks 'threads' array");
    h.threads = j["threads"].get<std::vector<std::string>>();
    const std::string mode = j.value("mode", std::string("trace"));
    if (mode == "trace") {
      h.mode = TraceMode::kTrace;
    } else if (mode == "isolated") {
      h.mode = TraceMode::kIsolated;
    } else if (mode == "paired") {
      h.mode = TraceMode::kPaired;
    } else {
      fail_at(Errc::kParse, 1, "unknown mode '" + mode + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail_at(Errc::kParse, 1, std::string("malformed header: ") + e.what());
  }

  std::map<std::string, int> seen;
  for (const auto& t : h.threads) {
    if (t.empty() || t.find(',') != std::string::npos) {
      throw Error(Errc::kRosterInconsistency, "invalid thread id '" + t + "'");
    }
    if (seen[t]++ > 0) throw Error(Errc::kRosterInconsistency, "duplicate thread id '" + t + "'");
  }
  if (h.mode == TraceMode::kIsolated && h.threads.size() != 1) {
    throw Error(Errc::kRosterInconsistency, "isolated profile must list exactly one thread");
  }
  if (h.mode == TraceMode::kPaired && h.threads.size() != 2) {
    throw Error(Errc::kRosterInconsistency, "paired profile must list exactly two threads");
  }
  return h;
}

void validate_roster(const TraceDocument& doc) {
  const auto& roster = doc.header.threads;
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < roster.size(); ++i) pos.emplace(roster[i], i);

  // Last quantum seen per thread; gaps inside a thread's lifetime are errors.
  std::vector<std::optional<std::uint64_t>> last(roster.size());
  for (const auto& row : doc.rows) {
    const auto& s = row.sample;
    const auto idx = pos.at(s.thread_id);
    if (last[idx] && s.quantum_index != *last[idx] + 1) {
      throw Error(Errc::kRosterInconsistency, "thread '" + s.thread_id + "' jumps from quantum " +
                                                  std::to_string(*last[idx]) + " to " +
                                                  std::to_string(s.quantum_index));
    }
    last[idx] = s.quantum_index;
  }
}

}  // namespace

std::uint64_t TraceDocument::quantum_count() const {
  return rows.empty() ? 0 : rows.back().sample.quantum_index + 1;
}

TraceDocument parse_trace(std::istream& in) {
  TraceDocument doc;
  std::string line;
  std::size_t lineno = 0;

  // Header: first non-blank line.
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    doc.header = parse_header(line);
    have_header = true;
    break;
  }
  if (!have_header) fail_at(Errc::kParse, lineno, "missing JSON header");

  const bool profile = doc.header.mode != TraceMode::kTrace;
  const std::size_t ncols = profile ? 7 : 6;
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < doc.header.threads.size(); ++i) pos.emplace(doc.header.threads[i], i);

  bool first_row = true;
  std::uint64_t cur_quantum = 0;
  std::optional<std::size_t> prev_pos;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_csv(body);
    if (first_row && !fields.empty() && fields[0] == "quantum") {
      first_row = false;
      continue;  // column header line
    }
    first_row = false;
    if (fields.size() != ncols) {
      fail_at(Errc::kParse, lineno, "expected " + std::to_string(ncols) + " columns, got " +
                                        std::to_string(fields.size()));
    }
    TraceRow row;
    auto& s = row.sample;
    s.quantum_index = parse_count(fields[0], lineno, "quantum");
    s.thread_id = std::string(fields[1]);
    s.cpu_cycles = parse_count(fields[2], lineno, "cpu_cycles");
    s.inst_spec = parse_count(fields[3], lineno, "inst_spec");
    s.stall_frontend = parse_count(fields[4], lineno, "stall_frontend");
    s.stall_backend = parse_count(fields[5], lineno, "stall_backend");
    if (profile) row.committed_instructions = parse_count(fields[6], lineno, "committed_instructions");

    const auto it = pos.find(s.thread_id);
    if (it == pos.end()) {
      fail_at(Errc::kRosterInconsistency, lineno, "thread '" + s.thread_id + "' is not in the roster");
    }
    if (doc.rows.empty()) {
      if (s.quantum_index != 0) fail_at(Errc::kRosterInconsistency, lineno, "first quantum must be 0");
      cur_quantum = 0;
    } else if (s.quantum_index == cur_quantum) {
      if (prev_pos && it->second <= *prev_pos) {
        fail_at(prev_pos == it->second ? Errc::kRosterInconsistency : Errc::kParse, lineno,
                "thread '" + s.thread_id + "' duplicated or out of roster order in quantum " +
                    std::to_string(cur_quantum));
      }
    } else if (s.quantum_index == cur_quantum + 1) {
      cur_quantum = s.quantum_index;
    } else if (s.quantum_index < cur_quantum) {
      fail_at(Errc::kParse, lineno, "rows are not ordered by quantum");
    } else {
      fail_at(Errc::kRosterInconsistency, lineno, "quantum " + std::to_string(cur_quantum + 1) + " has no samples");
    }
    prev_pos = it->second;
    doc.rows.push_back(std::move(row));
  }
  validate_roster(doc);
  return doc;
}

TraceDocument read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open trace '" + path.string() + "'");
  return parse_trace(in);
}

void write_trace(std::ostream& out, const TraceDocument& doc) {
  ordered_json h;
  h["version"] = doc.header.version;
  h["dispatch_width"] = doc.header.dispatch_width;
  if (std::floor(doc.header.quantum_ms) == doc.header.quantum_ms && doc.header.quantum_ms < 1e15) {
    h["quantum_ms"] = static_cast<std::int64_t>(doc.header.quantum_ms);
  } else {
    h["quantum_ms"] = doc.header.quantum_ms;
  }
  h["threads"] = doc.header.threads;
  const bool profile = doc.header.mode != TraceMode::kTrace;
  if (profile) h["mode"] = std::string(mode_name(doc.header.mode));
  out << h.dump() << '\n';
  out << kColumns;
  if (profile) out << ',' << kProfileColumn;
  out << '\n';
  for (const auto& row : doc.rows) {
    const auto& s = row.sample;
    out << s.quantum_index << ',' << s.thread_id << ',' << s.cpu_cycles << ',' << s.inst_spec << ','
        << s.stall_frontend << ',' << s.stall_backend;
    if (profile) out << ',' << row.committed_instructions.value_or(0);
    out << '\n';
  }
}

void write_trace_file(const std::filesystem::path& path, const TraceDocument& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write trace '" + path.string() + "'");
  write_trace(out, doc);
}

TraceProvider::TraceProvider(TraceDocument doc) : doc_(std::move(doc)) {
  for (std::size_t i = 0; i < doc_.rows.size(); ++i) {
    if (i == 0 || doc_.rows[i].sample.quantum_index != doc_.rows[i - 1].sample.quantum_index) {
      quantum_begin_.push_back(i);
    }
  }
  quantum_begin_.push_back(doc_.rows.size());
}

std::optional<std::vector<RawCounterSample>> TraceProvider::poll(std::uint64_t quantum) {
  if (quantum != next_) {
    throw Error(Errc::kOutOfOrderPoll,
                "polled quantum " + std::to_string(quantum) + ", next is " + std::to_string(next_));
  }
  if (next_ + 1 >= quantum_begin_.size()) return std::nullopt;
  std::vector<RawCounterSample> out;
  for (auto i = quantum_begin_[next_]; i < quantum_begin_[next_ + 1]; ++i) out.push_back(doc_.rows[i].sample);
  ++next_;
  return out;
}

TraceProvider open_trace(const std::filesystem::path& path) { return TraceProvider(read_trace_file(path)); }

std::optional<std::vector<RawCounterSample>> LiveProvider::poll(std::uint64_t) {
  throw Error(Errc::kUnsupportedPlatform, "live counter acquisition is not available on this platform");
}

}  // namespace synpa
