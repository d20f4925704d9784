#pragma once

// Service core behind the HTTP API: configuration, the async consultation
// queue, the risk monitor, and everything the endpoints call into.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "matec/case_model.hpp"
#include "matec/error.hpp"
#include "matec/llm.hpp"
#include "matec/news.hpp"
#include "matec/orchestrator.hpp"
#include "matec/rag.hpp"
#include "matec/registry.hpp"
#include "matec/store.hpp"

namespace matec {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;

    std::string backend = "mock";        // "mock" or "live"
    std::string endpoint;                // live: chat-completions base URL
    std::string model;                   // live: model name
    std::uint64_t mock_seed = 0;
    std::vector<std::string> mock_faults;          // parse_fault syntax
    std::map<std::string, int> mock_latency_ms;    // role -> simulated latency
    bool mock_realtime = false;

    std::string embedder = "hash";       // "hash" or "http"
    std::string embedding_endpoint;
    std::string embedding_model;
    std::size_t embedding_dimension = 256;

    std::filesystem::path roster;        // empty: compiled-in default roster
    std::filesystem::path store_dir = "matec-data";
    int parallelism = 5;
    int agent_timeout_ms = 30000;
    int monitor_interval_s = 300;
    int consult_workers = 2;
    int retrieval_k = 4;
    bool synthesis_includes_all_roles = true;
    bool durable = true;
    std::vector<std::string> digest_recipients{"medical director", "nurse manager", "patient safety officer"};

    // Relative paths resolve against `base_dir`. Throws BadConfig.
    static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static ServiceConfig load_file(const std::filesystem::path& file);
    void validate() const; // durations > 0, roster exists
};

// ValidationFailed carrying the full report.
class ValidationError : public Error {
public:
    explicit ValidationError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

struct ConsultationRequest {
    std::string case_id;
    std::string question;
    std::optional<std::string> template_id;
    std::optional<ConsultMode> mode;
    std::vector<AgentRole> team;
    std::string idempotency_key;
};

struct Accepted {
    std::string transcript_id;
    bool replayed = false;
};

enum class ConsultationState { Pending, Complete, Failed };
std::string_view to_string(ConsultationState s);

struct ConsultationStatus {
    std::string transcript_id;
    std::string case_id;
    ConsultationState state = ConsultationState::Pending;
    std::optional<Transcript> transcript;
    std::optional<FailedConsultation> failure;
};

struct RiskEvaluation {
    std::string case_id;
    Instant observed_at{};
    news::NewsResult news;
    std::string recommendation;
};

struct GapDigest {
    std::string unit_id;
    std::vector<std::string> case_ids;
    GapReport report;
    std::vector<std::string> recipients;
};

class Service {
public:
    // `backend` overrides the configured one (tests).
    explicit Service(ServiceConfig config, std::shared_ptr<const llm::CompletionBackend> backend = nullptr);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Cases. Errors: ValidationFailed, CaseExists, CaseNotFound.
    PatientCase create_case(const PatientCase& c, const std::string& unit = {});
    PatientCase get_case(const std::string& case_id) const;
    PatientCase append_vitals(const std::string& case_id, const std::vector<VitalSigns>& vitals);

    // Consultations run on the worker queue; poll consultation().
    Accepted submit_consultation(const ConsultationRequest& req);
    Accepted submit_followup(const std::string& transcript_id, const std::string& question,
                             const std::string& idempotency_key = {});
    ConsultationStatus consultation(const std::string& transcript_id) const;

    Transcript specialist_consult(const std::string& case_id, const std::string& specialty, const std::string& question);
    std::string navigator_explain(const std::string& transcript_id);
    DischargeSummary discharge_summary(const std::string& case_id);

    RiskEvaluation evaluate_risk(const std::string& case_id) const;
    std::vector<news::MonitorAlert> alerts(const std::string& case_id) const;

    std::size_t ingest(const std::string& doc_id, const std::string& title, const std::string& body,
                       std::size_t chunk_size = 1000, std::size_t overlap = 200);
    std::size_t document_chunks() const;

    GapDigest gap_digest(const std::string& unit_id) const;

    // One monitor pass; returns the number of new alerts. Each case is
    // processed in isolation.
    std::size_t monitor_tick();
    void start_monitor();

    // Blocks until no consultation is queued or running.
    bool wait_idle(std::chrono::milliseconds timeout) const;

    const Registry& registry() const { return registry_; }
    const ServiceConfig& config() const { return config_; }
    const llm::CompletionBackend& backend() const { return *backend_; }
    ServiceStore& store() { return *store_; }

private:
    void enqueue(std::function<void()> job);
    void worker_loop();
    std::string new_transcript_id();
    Accepted start(const PatientCase& c, std::string question, ConsultMode mode, RunOptions options,
                   const std::string& idempotency_key);

    ServiceConfig config_;
    Registry registry_;
    std::shared_ptr<const llm::CompletionBackend> backend_;
    std::unique_ptr<VectorStore> documents_;
    std::unique_ptr<ServiceStore> store_;
    std::unique_ptr<Orchestrator> orchestrator_;

    mutable std::mutex case_mutex_;            // serializes case mutations
    mutable std::mutex queue_mutex_;
    mutable std::condition_variable queue_cv_;
    mutable std::condition_variable idle_cv_;
    std::deque<std::function<void()>> queue_;
    std::map<std::string, std::string> pending_; // transcript id -> case id
    std::size_t running_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;

    std::mutex monitor_mutex_;
    std::condition_variable monitor_cv_;
    std::thread monitor_;
};

} // namespace matec
