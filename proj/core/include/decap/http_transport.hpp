#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace decap {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Minimal JSON-over-HTTP POST seam shared by the completion and embedding
/// clients. Implementations must be callable from several threads at once.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;

  /// POSTs `body` to base-path + `path`. Returns any HTTP status; throws
  /// TransportError only when no response was received.
  virtual HttpResponse post_json(std::string_view path, const std::string& body,
                                 const HttpHeaders& headers) = 0;
};

/// "http://host:port/v1" -> origin "http://host:port", prefix "/v1".
struct BaseUrl {
  std::string origin;
  std::string path_prefix;

  static BaseUrl parse(std::string_view url);
};

std::unique_ptr<HttpTransport> make_http_transport(std::string_view base_url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(120));

}  // namespace decap
