#pragma once

// Local chat-completion server that replays canned replies in rotation.
// Valid replies carry a fenced proposal, malformed ones prose only, and
// timeouts stall past the client's deadline.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace adcmd::testing {

enum class StubReply { Valid, Malformed, Timeout };

class StubLlm {
 public:
  explicit StubLlm(std::vector<StubReply> rotation, int stall_ms = 600,
                   std::string valid_content = "Here is my advice.\n```json\n"
                                               "{\"basis\": \"air_dominance\", \"deltas\": {\"attack_supply_threshold\": 16},"
                                               " \"rationale\": \"Air beats their ground army.\"}\n```\nGood luck.")
      : rotation_(std::move(rotation)), stall_ms_(stall_ms), valid_(std::move(valid_content)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const std::size_t n = calls_.fetch_add(1);
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
      }
      switch (rotation_[n % rotation_.size()]) {
        case StubReply::Valid:
          res.set_content(completion(valid_), "application/json");
          break;
        case StubReply::Malformed:
          res.set_content(completion("I think you should build more units and attack soon."), "application/json");
          break;
        case StubReply::Timeout: {
          std::unique_lock lock(mu_);
          cv_.wait_for(lock, std::chrono::milliseconds(stall_ms_), [this] { return stopping_; });
          res.set_content(completion(valid_), "application/json");
          break;
        }
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubLlm() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::size_t calls() const { return calls_.load(); }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }

 private:
  static std::string completion(const std::string& content) {
    return nlohmann::json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}}
        .dump();
  }

  std::vector<StubReply> rotation_;
  int stall_ms_;
  std::string valid_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<std::size_t> calls_{0};
  std::string last_body_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
};

}  // namespace adcmd::testing
