#include <fstream>
#include <sstream>

#include "matec/json_codec.hpp"
#include "matec/service.hpp"
#include "matec/text.hpp"

namespace matec {

namespace {

Error bad_config(const std::string& msg) { return Error("BadConfig", msg); }

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw bad_config(path + "." + key + ": wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

} // namespace

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ServiceConfig c;
    try {
        json_util::expect_object(j, "$",
                                 {"listen", "backend", "embedder", "roster", "store_dir", "parallelism",
                                  "agent_timeout_ms", "monitor_interval_s", "consult_workers", "retrieval_k",
                                  "synthesis_includes_all_roles", "durable", "digest_recipients"});
        if (auto it = j.find("listen"); it != j.end()) {
            const auto listen = it->get<std::string>();
            const auto colon = listen.rfind(':');
            if (colon == std::string::npos) throw bad_config("$.listen: expected host:port");
            c.host = listen.substr(0, colon);
            const auto port = text::parse_number(listen.substr(colon + 1));
            if (!port || *port < 0 || *port > 65535 || *port != static_cast<int>(*port)) {
                throw bad_config("$.listen: bad port");
            }
            c.port = static_cast<int>(*port);
        }
        if (auto it = j.find("backend"); it != j.end()) {
            json_util::expect_object(*it, "$.backend",
                                     {"kind", "endpoint", "model", "seed", "faults", "latency_ms", "realtime"});
            read(*it, "kind", c.backend, "$.backend");
            read(*it, "endpoint", c.endpoint, "$.backend");
            read(*it, "model", c.model, "$.backend");
            read(*it, "seed", c.mock_seed, "$.backend");
            read(*it, "faults", c.mock_faults, "$.backend");
            read(*it, "latency_ms", c.mock_latency_ms, "$.backend");
            read(*it, "realtime", c.mock_realtime, "$.backend");
        }
        if (auto it = j.find("embedder"); it != j.end()) {
            json_util::expect_object(*it, "$.embedder", {"kind", "endpoint", "model", "dimension"});
            read(*it, "kind", c.embedder, "$.embedder");
            read(*it, "endpoint", c.embedding_endpoint, "$.embedder");
            read(*it, "model", c.embedding_model, "$.embedder");
            read(*it, "dimension", c.embedding_dimension, "$.embedder");
        }
        std::string roster, store_dir = c.store_dir.string();
        read(j, "roster", roster, "$");
        read(j, "store_dir", store_dir, "$");
        c.roster = resolve(roster, base_dir);
        c.store_dir = resolve(store_dir, base_dir);
        read(j, "parallelism", c.parallelism, "$");
        read(j, "agent_timeout_ms", c.agent_timeout_ms, "$");
        read(j, "monitor_interval_s", c.monitor_interval_s, "$");
        read(j, "consult_workers", c.consult_workers, "$");
        read(j, "retrieval_k", c.retrieval_k, "$");
        read(j, "synthesis_includes_all_roles", c.synthesis_includes_all_roles, "$");
        read(j, "durable", c.durable, "$");
        read(j, "digest_recipients", c.digest_recipients, "$");
    } catch (const Error& e) {
        if (e.code() == "BadConfig") throw;
        throw bad_config(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw bad_config(e.what());
    }
    c.validate();
    return c;
}

ServiceConfig ServiceConfig::load_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw bad_config("cannot read config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw bad_config(file.string() + ": not valid JSON");
    return from_json(j, std::filesystem::absolute(file).parent_path());
}

void ServiceConfig::validate() const {
    if (backend != "mock" && backend != "live") throw bad_config("backend.kind must be mock or live");
    if (backend == "live" && (endpoint.empty() || model.empty())) {
        throw bad_config("live backend needs endpoint and model");
    }
    if (embedder != "hash" && embedder != "http") throw bad_config("embedder.kind must be hash or http");
    if (embedder == "http" && (embedding_endpoint.empty() || embedding_model.empty())) {
        throw bad_config("http embedder needs endpoint and model");
    }
    if (embedding_dimension == 0) throw bad_config("embedder.dimension must be positive");
    if (parallelism < 1) throw bad_config("parallelism must be at least 1");
    if (consult_workers < 1) throw bad_config("consult_workers must be at least 1");
    if (agent_timeout_ms <= 0) throw bad_config("agent_timeout_ms must be positive");
    if (monitor_interval_s <= 0) throw bad_config("monitor_interval_s must be positive");
    if (retrieval_k < 0) throw bad_config("retrieval_k must not be negative");
    if (port < 0 || port > 65535) throw bad_config("port out of range");
    if (!roster.empty() && !std::filesystem::exists(roster)) throw bad_config("roster file not found: " + roster.string());
    if (store_dir.empty()) throw bad_config("store_dir must be set");
}

} // namespace matec
