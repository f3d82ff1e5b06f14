#include "structrag/http_backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace structrag {

namespace {

using json = nlohmann::json;

class HttplibTransport final : public HttpTransport {
public:
    HttpResult post(const std::string& url, const std::map<std::string, std::string>& headers,
                    const std::string& body, std::chrono::seconds timeout) override {
        // Split "scheme://host[:port]" from the path.
        auto scheme_end = url.find("://");
        auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        std::string origin = url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);

        HttpResult result;
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            result.network_error = true;
            result.error = httplib::to_string(res.error());
            return result;
        }
        result.status = res->status;
        result.body = res->body;
        return result;
    }
};

std::string chat_completions_url(std::string endpoint) {
    while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
    const std::string suffix = "/chat/completions";
    if (endpoint.size() >= suffix.size() && endpoint.compare(endpoint.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return endpoint;
    }
    return endpoint + suffix;
}

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport() { return std::make_unique<HttplibTransport>(); }

HttpBackend::HttpBackend(HttpBackendOptions options, std::unique_ptr<HttpTransport> transport)
    : options_(std::move(options)), transport_(std::move(transport)) {
    if (options_.endpoint.empty()) throw ConfigError("backend.endpoint", "no endpoint configured");
    if (!transport_) throw ConfigError("backend", "no HTTP transport");
    url_ = chat_completions_url(options_.endpoint);
}

std::string HttpBackend::build_request_body(const ChatRequest& request) {
    json messages = json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    return json{{"model", request.model},
                {"messages", std::move(messages)},
                {"temperature", request.temperature},
                {"max_tokens", request.max_output_tokens}}
        .dump();
}

ChatResponse HttpBackend::parse_response_body(const std::string& body) {
    ChatResponse out;
    try {
        auto j = json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw MalformedResponse("choices[0].message.content is not a string");
        out.text = content.get<std::string>();
        if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
            out.usage.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
            out.usage.output_tokens = u->value("completion_tokens", std::size_t{0});
        }
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("unexpected chat-completions payload: ") + e.what());
    }
    return out;
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    std::map<std::string, std::string> headers;
    if (!options_.api_key.empty()) headers["Authorization"] = "Bearer " + options_.api_key;

    auto result = transport_->post(url_, headers, build_request_body(request), options_.timeout);
    if (result.network_error) throw TransientError(TransientError::Kind::network, result.error);
    if (result.status == 429) throw TransientError(TransientError::Kind::rate_limited, "HTTP 429");
    if (result.status == 408 || result.status >= 500) {
        throw TransientError(TransientError::Kind::server, "HTTP " + std::to_string(result.status));
    }
    if (result.status < 200 || result.status >= 300) {
        throw BackendUnavailable("HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 200));
    }
    return parse_response_body(result.body);
}

}  // namespace structrag
