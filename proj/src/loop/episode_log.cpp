#include "adcmd/loop/episode_log.hpp"

#include <filesystem>

#include "adcmd/error.hpp"

namespace adcmd::loop {

namespace {

void mix(std::uint64_t& hash, std::string_view bytes) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  hash ^= '\n';
  hash *= 0x100000001b3ULL;
}

std::string without_timing(const nlohmann::json& record) {
  if (!record.is_object() || !record.contains("timing")) return record.dump();
  nlohmann::json copy = record;
  copy.erase("timing");
  return copy.dump();
}

}  // namespace

EpisodeLog::EpisodeLog(const std::string& path) : path_(path) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  out_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*out_) throw Error(ErrorCode::io, "cannot open log file " + path);
}

void EpisodeLog::append(const nlohmann::json& record) {
  mix(hash_, without_timing(record));
  ++count_;
  if (out_) {
    *out_ << record.dump() << '\n';
    out_->flush();
    if (!*out_) throw Error(ErrorCode::io, "write failed: " + path_);
  }
  if (keep_) records_.push_back(record);
}

void EpisodeLog::flush() {
  if (out_) out_->flush();
}

std::vector<nlohmann::json> read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::validation, path + ": line " + std::to_string(n) + " is not JSON");
    }
    if (!j.is_object() || !j.contains("type"))
      throw Error(ErrorCode::validation, path + ": line " + std::to_string(n) + " is not a log record");
    out.push_back(std::move(j));
  }
  return out;
}

std::uint64_t content_hash(const std::vector<nlohmann::json>& records) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const nlohmann::json& r : records) mix(hash, without_timing(r));
  return hash;
}

}  // namespace adcmd::loop
