#include "longcot/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace longcot::backend {

namespace {

using nlohmann::json;

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

FinishReason finish_reason_from(const std::string& s) {
    if (s == "stop" || s.empty()) return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    return FinishReason::error;
}

}  // namespace

std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

void validate(const CompletionRequest& request) {
    if (request.messages.empty()) {
        throw std::invalid_argument("completion request needs at least one message");
    }
    if (request.messages.back().role != Role::user) {
        throw std::invalid_argument("last message must have role user");
    }
    if (request.max_tokens < 1) {
        throw std::invalid_argument("max_tokens must be positive");
    }
    if (request.temperature < 0.0) {
        throw std::invalid_argument("temperature must be nonnegative");
    }
}

std::string prompt_text(const CompletionRequest& request) {
    std::string out;
    for (const auto& m : request.messages) {
        if (!out.empty()) out += '\n';
        out += m.content;
    }
    return out;
}

Completion parse_chat_completion_body(const std::string& body) {
    json payload = json::parse(body, nullptr, false);
    if (payload.is_discarded()) {
        throw BackendError("unparseable completion response body", 0, body);
    }
    if (!payload.contains("choices") || !payload["choices"].is_array() ||
        payload["choices"].empty()) {
        throw BackendError("completion response has no choices", 0, body);
    }
    const json& choice = payload["choices"][0];
    Completion completion;
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
        completion.text = choice["message"]["content"].get<std::string>();
    } else {
        throw BackendError("completion choice has no message content", 0, body);
    }
    completion.finish_reason = finish_reason_from(choice.value("finish_reason", "stop"));
    if (payload.contains("usage") && payload["usage"].is_object()) {
        const json& usage = payload["usage"];
        completion.prompt_tokens = usage.value("prompt_tokens", 0LL);
        completion.completion_tokens = usage.value("completion_tokens", 0LL);
    } else {
        completion.usage_missing = true;
    }
    return completion;
}

// ---------------------------------------------------------------------------
// Semaphore
// ---------------------------------------------------------------------------

Semaphore::Semaphore(int slots) : slots_(slots) {
    if (slots < 1) throw std::invalid_argument("parallelism bound must be >= 1");
}

void Semaphore::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
}

void Semaphore::release() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++slots_;
    }
    cv_.notify_one();
}

namespace {

struct SlotGuard {
    explicit SlotGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
    Semaphore& sem;
};

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(std::string base_url, std::chrono::seconds timeout)
        : base_url_(std::move(base_url)), timeout_(timeout) {}

    HttpResult post_json(const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers) override {
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_.count(), 0);
        client.set_read_timeout(timeout_.count(), 0);
        client.set_write_timeout(timeout_.count(), 0);
        httplib::Headers hl;
        for (const auto& [k, v] : headers) hl.emplace(k, v);
        auto res = client.Post(path, hl, body, "application/json");
        HttpResult out;
        if (!res) {
            out.network_error = true;
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        return out;
    }

private:
    std::string base_url_;
    std::chrono::seconds timeout_;
};

std::string build_request_body(const CompletionRequest& request) {
    json body;
    body["model"] = request.model_name;
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    body["max_tokens"] = request.max_tokens;
    body["temperature"] = request.temperature;
    if (request.seed) body["seed"] = *request.seed;
    return body.dump();
}

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      std::chrono::seconds timeout) {
    return std::make_unique<HttplibTransport>(base_url, timeout);
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpConfig config, std::unique_ptr<HttpTransport> transport,
                         Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport)
                           : make_httplib_transport(config_.base_url, config_.timeout)),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      slots_(config_.parallelism) {
    if (const char* value = std::getenv(config_.credential_env.c_str())) {
        credential_ = value;
    }
}

Completion HttpBackend::complete(const CompletionRequest& request) {
    validate(request);
    SlotGuard guard(slots_);

    std::vector<std::pair<std::string, std::string>> headers;
    if (!credential_.empty()) {
        headers.emplace_back("Authorization", "Bearer " + credential_);
    }
    const std::string body = build_request_body(request);

    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.5, 1.0);

    HttpResult last;
    for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
        if (attempt > 0) {
            double base = static_cast<double>(config_.retry.initial_delay.count()) *
                          std::pow(config_.retry.backoff_factor, attempt - 1);
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(base * jitter(jitter_rng)));
            sleeper_(delay);
        }
        last = transport_->post_json(config_.completions_path, body, headers);
        if (last.network_error) {
            continue;
        }
        if (last.status >= 200 && last.status < 300) {
            return parse_chat_completion_body(last.body);
        }
        if (!retryable_status(last.status)) {
            throw BackendError("completion request failed with HTTP " +
                                   std::to_string(last.status),
                               last.status, last.body);
        }
    }
    if (last.network_error) {
        throw BackendError("completion request failed after " +
                               std::to_string(config_.retry.max_attempts) +
                               " attempts: " + last.error,
                           0, {});
    }
    throw BackendError("completion request failed after " +
                           std::to_string(config_.retry.max_attempts) + " attempts with HTTP " +
                           std::to_string(last.status),
                       last.status, last.body);
}

// ---------------------------------------------------------------------------
// BoundedBackend
// ---------------------------------------------------------------------------

BoundedBackend::BoundedBackend(std::shared_ptr<Backend> inner, int parallelism)
    : inner_(std::move(inner)), slots_(parallelism) {}

Completion BoundedBackend::complete(const CompletionRequest& request) {
    SlotGuard guard(slots_);
    return inner_->complete(request);
}

}  // namespace longcot::backend
