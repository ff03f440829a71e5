#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace longcot::backend {

enum class Role { system, user, assistant };

std::string to_string(Role role);

struct Message {
    Role role = Role::user;
    std::string content;
};

struct CompletionRequest {
    std::string model_name;
    std::vector<Message> messages;
    int max_tokens = 4096;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
};

/// Throws std::invalid_argument unless the request has at least one message
/// and the last one is a user message.
void validate(const CompletionRequest& request);

/// Concatenated message contents, the text the mock scans for markers.
std::string prompt_text(const CompletionRequest& request);

enum class FinishReason { stop, length, error };

struct Completion {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    FinishReason finish_reason = FinishReason::stop;
    // Set when the service response carried no usage block; counts are 0.
    bool usage_missing = false;
};

struct BackendError : std::runtime_error {
    explicit BackendError(const std::string& what, int status = 0, std::string body = {})
        : std::runtime_error(what), status(status), body(std::move(body)) {}
    int status;
    std::string body;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// HTTP chat-completions client
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_delay{1000};
    double backoff_factor = 2.0;
};

struct HttpConfig {
    std::string base_url;                          // e.g. "http://localhost:8000"
    std::string completions_path = "/v1/chat/completions";
    std::string credential_env = "LONGCOT_API_KEY";  // credential read from env only
    RetryPolicy retry;
    int parallelism = 8;
    std::chrono::seconds timeout{120};
};

struct HttpResult {
    int status = 0;
    std::string body;
    bool network_error = false;
    std::string error;
};

/// Transport seam: the retry/parse logic above it is what the tests
/// fault-inject through.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post_json(const std::string& path, const std::string& body,
                                 const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      std::chrono::seconds timeout);

/// Runtime-bound counting semaphore guarding concurrent in-flight requests.
class Semaphore {
public:
    explicit Semaphore(int slots);
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int slots_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Chat-completions client. Retries network errors, 429 and 5xx with
/// jittered exponential backoff; other non-2xx responses surface immediately
/// with the body. Concurrent complete() calls are safe and the parallelism
/// bound is enforced inside the handle.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpConfig config, std::unique_ptr<HttpTransport> transport = nullptr,
                         Sleeper sleeper = {});
    Completion complete(const CompletionRequest& request) override;
    std::string name() const override { return "http:" + config_.base_url; }

private:
    HttpConfig config_;
    std::unique_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
    Semaphore slots_;
    std::string credential_;
};

/// Applies a parallelism bound to any backend (the mock is unbounded on its
/// own). The composed handle is what pipeline tasks share.
class BoundedBackend final : public Backend {
public:
    BoundedBackend(std::shared_ptr<Backend> inner, int parallelism);
    Completion complete(const CompletionRequest& request) override;
    std::string name() const override { return inner_->name(); }

private:
    std::shared_ptr<Backend> inner_;
    Semaphore slots_;
};

/// Parses one chat-completions response body into a Completion.
/// Exposed for the transport tests.
Completion parse_chat_completion_body(const std::string& body);

}  // namespace longcot::backend
