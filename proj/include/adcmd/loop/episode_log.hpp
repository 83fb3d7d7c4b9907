#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace adcmd::loop {

// Append-only JSON Lines log. Every record is an object with a "type"
// ("header", "tick", "instruction", "proposal", "decision", "policy",
// "advisor_error", "stale", "end"). Wall-clock data lives under a "timing"
// key, which content_hash() ignores so that identical runs hash identically.
class EpisodeLog {
 public:
  EpisodeLog() = default;
  // Also appends every record to `path`, flushing each line. Throws
  // Error(io) when the file cannot be opened.
  explicit EpisodeLog(const std::string& path);

  void append(const nlohmann::json& record);

  // Keep record objects in memory (default true). Turn off for long batch runs
  // that only need the hash.
  void set_keep_records(bool keep) { keep_ = keep; }

  const std::vector<nlohmann::json>& records() const { return records_; }
  std::uint64_t content_hash() const { return hash_; }
  std::size_t size() const { return count_; }
  const std::string& path() const { return path_; }
  void flush();

 private:
  std::vector<nlohmann::json> records_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  std::size_t count_ = 0;
  bool keep_ = true;
  std::string path_;
  std::unique_ptr<std::ofstream> out_;
};

// Reads a log file; throws Error(io) when missing or unreadable and
// Error(validation) on a line that is not a JSON object.
std::vector<nlohmann::json> read_log(const std::string& path);

// Hash of the records with "timing" removed, as EpisodeLog computes it.
std::uint64_t content_hash(const std::vector<nlohmann::json>& records);

}  // namespace adcmd::loop
