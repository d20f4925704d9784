#include "matec/embedder.hpp"

#include <cctype>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "matec/error.hpp"
#include "matec/http_util.hpp"
#include "matec/text.hpp"

namespace matec {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    const size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void normalize_in_place(std::vector<double>& v) {
    const double norm = std::sqrt(dot(v, v));
    if (norm == 0) throw Error("ZeroVector", "cannot normalize a zero vector");
    for (auto& x : v) x /= norm;
}

std::vector<double> HashEmbedder::embed(std::string_view input) const {
    if (input.empty()) throw Error("EmptyText", "cannot embed empty text");
    std::vector<double> v(dimension_, 0.0);
    auto add = [&](std::string_view token) {
        const auto h = text::fnv1a(token);
        v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    };
    std::string token;
    bool any = false;
    for (char raw : input) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else if (!token.empty()) {
            add(token);
            token.clear();
            any = true;
        }
    }
    if (!token.empty()) {
        add(token);
        any = true;
    }
    if (!any) add(input);
    // Opposite-signed tokens can cancel exactly; fall back to the raw text.
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; })) v[text::fnv1a(input) % dimension_] = 1.0;
    normalize_in_place(v);
    return v;
}

std::vector<double> HttpEmbedder::embed(std::string_view input) const {
    if (input.empty()) throw Error("EmptyText", "cannot embed empty text");
    const auto url = split_url(config_.base_url);
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    const nlohmann::json body{{"model", config_.model}, {"input", std::string(input)}};
    auto res = client.Post(url.path_prefix + "/embeddings", headers, body.dump(), "application/json");
    if (!res) throw Error("BackendError", "embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error("BackendError", "embedding endpoint returned " + std::to_string(res->status));
    try {
        auto v = nlohmann::json::parse(res->body).at("data").at(0).at("embedding").get<std::vector<double>>();
        if (config_.dimension != 0 && v.size() != config_.dimension) {
            throw Error("BackendError", "embedding dimension mismatch");
        }
        normalize_in_place(v);
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw Error("BackendError", std::string("malformed embedding response: ") + e.what());
    }
}

} // namespace matec
