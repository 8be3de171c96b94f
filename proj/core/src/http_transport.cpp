#include "decap/http_transport.hpp"

#include "decap/errors.hpp"

#include <httplib.h>

namespace decap {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(BaseUrl url, std::chrono::seconds timeout)
      : url_(std::move(url)), timeout_(timeout) {}

  HttpResponse post_json(std::string_view path, const std::string& body,
                         const HttpHeaders& headers) override {
    // httplib::Client is not safe for concurrent requests; one per call.
    httplib::Client client(url_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers request_headers;
    for (const auto& [name, value] : headers) request_headers.emplace(name, value);
    const std::string full_path = url_.path_prefix + std::string(path);
    auto result = client.Post(full_path, request_headers, body, "application/json");
    if (!result) {
      throw TransportError("POST " + url_.origin + full_path + " failed: " +
                           httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }

 private:
  BaseUrl url_;
  std::chrono::seconds timeout_;
};

}  // namespace

BaseUrl BaseUrl::parse(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("base URL must start with http:// or https://: '" + std::string(url) + "'");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported URL scheme '" + std::string(scheme) + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  BaseUrl out;
  if (path_start == std::string_view::npos) {
    out.origin = std::string(url);
  } else {
    out.origin = std::string(url.substr(0, path_start));
    out.path_prefix = std::string(url.substr(path_start));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  if (out.origin.size() <= scheme_end + 3) throw ConfigError("base URL has no host: '" + std::string(url) + "'");
  return out;
}

std::unique_ptr<HttpTransport> make_http_transport(std::string_view base_url,
                                                   std::chrono::seconds timeout) {
  auto url = BaseUrl::parse(base_url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.origin.rfind("https://", 0) == 0) {
    throw ConfigError("this build has no TLS support; use an http:// endpoint");
  }
#endif
  return std::make_unique<HttplibTransport>(std::move(url), timeout);
}

}  // namespace decap
