#pragma once

#include "structrag/gateway.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace structrag {

struct HttpResult {
    int status = 0;
    std::string body;
    bool network_error = false;  // timeout, refused connection, TLS failure...
    std::string error;
};

// Minimal POST transport so the wire logic can be tested without sockets.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post(const std::string& url, const std::map<std::string, std::string>& headers,
                            const std::string& body, std::chrono::seconds timeout) = 0;
};

// cpp-httplib backed transport; supports http:// and https:// URLs.
std::unique_ptr<HttpTransport> make_httplib_transport();

struct HttpBackendOptions {
    std::string endpoint;  // base URL, e.g. "http://localhost:8000/v1"
    std::string api_key;
    std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat-completions client: POSTs
// {model, messages[{role, content}], temperature, max_tokens} and reads
// choices[0].message.content.
class HttpBackend final : public ChatBackend {
public:
    HttpBackend(HttpBackendOptions options, std::unique_ptr<HttpTransport> transport = make_httplib_transport());

    ChatResponse complete(const ChatRequest& request) override;

    // Full chat-completions URL derived from the configured endpoint.
    const std::string& url() const noexcept { return url_; }

    static std::string build_request_body(const ChatRequest& request);
    static ChatResponse parse_response_body(const std::string& body);

private:
    HttpBackendOptions options_;
    std::unique_ptr<HttpTransport> transport_;
    std::string url_;
};

}  // namespace structrag
