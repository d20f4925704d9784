#pragma once

#include <string>

namespace matec {

// "https://api.example.com:8443/v1/" -> {"https://api.example.com:8443", "/v1"}
struct UrlParts {
    std::string origin;
    std::string path_prefix;
};

UrlParts split_url(const std::string& base_url); // throws Error("BadUrl")

} // namespace matec
