#include "matec/http_util.hpp"

#include "matec/error.hpp"

namespace matec {

UrlParts split_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw Error("BadUrl", "url needs a scheme: " + base_url);
    const auto scheme = base_url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw Error("BadUrl", "unsupported scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    UrlParts parts;
    parts.origin = base_url.substr(0, path_start);
    if (path_start != std::string::npos) parts.path_prefix = base_url.substr(path_start);
    while (!parts.path_prefix.empty() && parts.path_prefix.back() == '/') parts.path_prefix.pop_back();
    if (parts.origin.size() <= scheme_end + 3) throw Error("BadUrl", "url has no host: " + base_url);
    return parts;
}

} // namespace matec
