#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>

#include "json.hpp"

#include "error.hpp"
#include "http.hpp"

namespace aicfc {

/// How thinking mode is switched on the endpoint.
enum class ThinkControl {
    Flag,      // request field "think": true/false
    Directive, // "/think" or "/no_think" appended to the user message
    Both,
};

inline ThinkControl think_control_from_string(const std::string& s) {
    if (s == "flag") {
        return ThinkControl::Flag;
    }
    if (s == "directive") {
        return ThinkControl::Directive;
    }
    if (s == "both") {
        return ThinkControl::Both;
    }
    throw InvalidArgument("think_control must be flag, directive or both, got \"" + s + "\"");
}

struct LlmConfig {
    std::string endpoint_url = "http://localhost:11434/api/chat";
    std::string model_name = "qwen3:14b";
    std::string auth_token;
    bool think = false;
    ThinkControl think_control = ThinkControl::Flag;
    double temperature = 0.0;
    int max_output_tokens = 4096;
    double timeout_s = 55.0;
    int max_retries = 1;
    double retry_backoff_s = 1.0;
    std::size_t max_concurrency = 1;

    void validate() const {
        if (!(timeout_s > 0.0)) {
            throw InvalidArgument("llm timeout_s must be > 0");
        }
        if (!(temperature >= 0.0)) {
            throw InvalidArgument("llm temperature must be >= 0");
        }
    }
};

struct ChatResult {
    std::string text;
    double latency_s = 0.0;
    std::optional<long> prompt_tokens;
    std::optional<long> completion_tokens;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResult chat(const std::string& system, const std::string& user) = 0;
};

/// Request body for one system+user exchange.
inline nlohmann::json chat_request(const LlmConfig& cfg, const std::string& system, const std::string& user) {
    std::string user_content = user;
    if (cfg.think_control != ThinkControl::Flag) {
        user_content += cfg.think ? " /think" : " /no_think";
    }
    nlohmann::json body{
        {"model", cfg.model_name},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user_content}}})},
        {"options", {{"temperature", cfg.temperature}, {"num_predict", cfg.max_output_tokens}}},
        {"stream", false},
    };
    if (cfg.think_control != ThinkControl::Directive) {
        body["think"] = cfg.think;
    }
    return body;
}

/// Accepts both Ollama ({"message": {...}}) and OpenAI ({"choices": [...]})
/// reply shapes. A separate reasoning field is folded back in as a
/// leading <think> block so callers always see the full assistant text.
inline ChatResult parse_chat_response(const std::string& reply) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::parse_error& e) {
        throw EndpointError(std::string("chat response is not JSON: ") + e.what());
    }
    const nlohmann::json* message = nullptr;
    if (doc.contains("message") && doc["message"].is_object()) {
        message = &doc["message"];
    } else if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty() &&
               doc["choices"][0].contains("message")) {
        message = &doc["choices"][0]["message"];
    }
    if (message == nullptr || !message->contains("content") || !(*message)["content"].is_string()) {
        throw EndpointError("chat response carries no assistant content");
    }
    ChatResult result;
    result.text = (*message)["content"].get<std::string>();
    for (const char* key : {"thinking", "reasoning_content"}) {
        if (message->contains(key) && (*message)[key].is_string() && !(*message)[key].get_ref<const std::string&>().empty()) {
            result.text = "<think>\n" + (*message)[key].get<std::string>() + "\n</think>\n\n" + result.text;
            break;
        }
    }
    if (doc.contains("prompt_eval_count")) {
        result.prompt_tokens = doc["prompt_eval_count"].get<long>();
    }
    if (doc.contains("eval_count")) {
        result.completion_tokens = doc["eval_count"].get<long>();
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
        const auto& usage = doc["usage"];
        if (usage.contains("prompt_tokens")) {
            result.prompt_tokens = usage["prompt_tokens"].get<long>();
        }
        if (usage.contains("completion_tokens")) {
            result.completion_tokens = usage["completion_tokens"].get<long>();
        }
    }
    return result;
}

/// Chat client for a local model server. Generations are serialized through a
/// semaphore of `max_concurrency` slots, shared by all callers of this instance.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(LlmConfig cfg)
        : cfg_(std::move(cfg)), endpoint_(http::parse_endpoint(cfg_.endpoint_url)),
          slots_(cfg_.max_concurrency) {
        cfg_.validate();
    }

    ChatResult chat(const std::string& system, const std::string& user) override {
        const std::string body = chat_request(cfg_, system, user).dump();
        http::SemaphoreGuard guard(slots_);
        const auto started = std::chrono::steady_clock::now();
        const std::string reply = http::post_json(endpoint_, body, {cfg_.timeout_s, cfg_.auth_token},
                                                  {cfg_.max_retries, cfg_.retry_backoff_s});
        ChatResult result = parse_chat_response(reply);
        result.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return result;
    }

    const LlmConfig& config() const noexcept { return cfg_; }

private:
    LlmConfig cfg_;
    http::Endpoint endpoint_;
    http::Semaphore slots_;
};

} // namespace aicfc
