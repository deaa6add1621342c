#pragma once

// Chat-completion backend abstraction: an OpenAI-compatible HTTP client
// plus the Backend interface the rerankers program against. The
// deterministic oracle backend lives in oracle.hpp.

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "genrank/errors.hpp"

namespace genrank {

enum class Role { system, user, assistant };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        default: return "assistant";
    }
}

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;  // 0 for reproducible reranking calls
    int max_tokens = 256;
};

struct ChatResponse {
    std::string content;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct BackendConfig {
    std::string base_url = "http://localhost:8080";
    std::string api_key_env = "GENRANK_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 3;
    int retry_base_ms = 250;
    int max_inflight = 4;  // concurrent in-flight request bound
};

// Rough budgeting heuristic, never billed-accurate: ceil(chars / 4).
inline std::size_t estimate_tokens(const std::string& text) {
    return (text.size() + 3) / 4;
}

inline void validate_request(const ChatRequest& request) {
    if (request.messages.empty()) throw ConfigError("chat request has no messages");
    Role first = request.messages.front().role;
    if (first != Role::system && first != Role::user)
        throw ConfigError("first chat message must be system or user");
    for (const ChatMessage& m : request.messages)
        if (m.role != Role::assistant && m.content.empty())
            throw ConfigError("system/user chat message has empty content");
    if (request.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

inline nlohmann::json request_to_json(const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const ChatMessage& m : request.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    return nlohmann::json{{"model", request.model},
                          {"messages", std::move(messages)},
                          {"temperature", request.temperature},
                          {"max_tokens", request.max_tokens}};
}

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

namespace detail {

// Splits "http://host:port/prefix" into client target and path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

inline bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace detail

// POSTs to {base_url}/v1/chat/completions with `Authorization: Bearer <key>`
// when the key env var is non-empty. Retries 429/5xx and transport failures
// with exponential backoff retry_base_ms * 2^attempt plus full jitter, up to
// max_retries. Shareable across threads; in-flight requests are bounded by
// config.max_inflight.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
        if (config_.timeout_ms <= 0) throw ConfigError("timeout_ms must be > 0");
        if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
        if (config_.retry_base_ms <= 0) throw ConfigError("retry_base_ms must be > 0");
        if (config_.max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr)
            throw BackendError("API key environment variable '" + config_.api_key_env +
                               "' is not set (set it to empty for unauthenticated servers)");
        api_key_ = key;
    }

    ChatResponse complete(const ChatRequest& request) override {
        validate_request(request);
        InflightSlot slot(*this);

        auto [target, prefix] = detail::split_base_url(config_.base_url);
        std::string path = prefix + "/v1/chat/completions";
        std::string body = request_to_json(request).dump();

        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        std::string last_failure;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) backoff_sleep(attempt - 1);
            httplib::Client client(target);
            client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
            client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
            client.set_write_timeout(std::chrono::milliseconds(config_.timeout_ms));

            auto res = client.Post(path, headers, body, "application/json");
            if (!res) {
                last_failure = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) return parse_response(res->body);
            if (detail::retryable_status(res->status)) {
                last_failure = "HTTP " + std::to_string(res->status);
                continue;
            }
            throw BackendError("endpoint error HTTP " + std::to_string(res->status) + ": " +
                                   excerpt(res->body),
                               res->status);
        }
        throw BackendError("retries exhausted after " + std::to_string(config_.max_retries + 1) +
                           " attempts (" + last_failure + ")");
    }

    const BackendConfig& config() const { return config_; }

private:
    struct InflightSlot {
        explicit InflightSlot(HttpBackend& b) : backend(b) {
            std::unique_lock<std::mutex> lock(b.mutex_);
            b.cv_.wait(lock, [&] { return b.inflight_ < b.config_.max_inflight; });
            ++b.inflight_;
        }
        ~InflightSlot() {
            {
                std::lock_guard<std::mutex> lock(backend.mutex_);
                --backend.inflight_;
            }
            backend.cv_.notify_one();
        }
        HttpBackend& backend;
    };

    static std::string excerpt(const std::string& body) {
        return body.size() <= 200 ? body : body.substr(0, 200) + "...";
    }

    static ChatResponse parse_response(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("protocol error, response is not JSON: ") + e.what());
        }
        ChatResponse out;
        try {
            out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw BackendError("protocol error, missing choices[0].message.content: " +
                               excerpt(body));
        }
        // usage is informational; tolerate absent or oddly-shaped fields
        try {
            if (j.contains("usage") && j["usage"].is_object()) {
                out.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
                out.completion_tokens = j["usage"].value("completion_tokens", 0L);
            }
        } catch (const nlohmann::json::exception&) {
        }
        return out;
    }

    // Full jitter: uniform in [0, retry_base_ms * 2^attempt].
    void backoff_sleep(int attempt) const {
        int exp = std::min(attempt, 20);
        double ceiling = static_cast<double>(config_.retry_base_ms) * std::pow(2.0, exp);
        thread_local std::mt19937 rng(std::random_device{}());
        std::uniform_real_distribution<double> dist(0.0, ceiling);
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(dist(rng)));
    }

    BackendConfig config_;
    std::string api_key_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int inflight_ = 0;
};

inline ChatResponse complete(const BackendConfig& config, const ChatRequest& request) {
    HttpBackend backend(config);
    return backend.complete(request);
}

}  // namespace genrank
