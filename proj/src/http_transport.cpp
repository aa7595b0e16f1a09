#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "regen/oracle.hpp"

namespace regen {

Transport default_transport() {
  return [](const HttpRequest& req) -> HttpResult {
    // Split "scheme://host[:port]/path" into the client base and the path.
    std::string url = req.url;
    std::size_t scheme_end = url.find("://");
    std::size_t path_start =
        url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : req.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    auto res = client.Post(path, headers, req.body, content_type);
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  };
}

}  // namespace regen
