#include "matec/service.hpp"

#include <random>

#include <spdlog/spdlog.h>

#include "matec/embedder.hpp"
#include "matec/live_backend.hpp"
#include "matec/mock_backend.hpp"
#include "matec/text.hpp"

namespace matec {

namespace {

std::string summarize(const ValidationReport& r) {
    std::string msg = std::to_string(r.size()) + (r.size() == 1 ? " violation" : " violations");
    if (!r.empty()) msg += ", first at " + r.front().path + ": " + r.front().message;
    return msg;
}

std::shared_ptr<const llm::CompletionBackend> make_backend(const ServiceConfig& c) {
    if (c.backend == "live") {
        return std::make_shared<llm::LiveBackend>(llm::with_env_key({c.endpoint, c.model, {}}));
    }
    auto script = llm::MockScript::default_script();
    for (const auto& f : c.mock_faults) script.faults.push_back(llm::parse_fault(f));
    script.latency_ms = c.mock_latency_ms;
    script.realtime = c.mock_realtime;
    return std::make_shared<llm::MockBackend>(std::move(script), c.mock_seed);
}

std::shared_ptr<const Embedder> make_embedder(const ServiceConfig& c) {
    if (c.embedder == "http") {
        HttpEmbedderConfig e;
        e.base_url = c.embedding_endpoint;
        e.model = c.embedding_model;
        e.dimension = c.embedding_dimension;
        if (const char* key = std::getenv("MATEC_LLM_API_KEY")) e.api_key = key;
        return std::make_shared<HttpEmbedder>(e);
    }
    return std::make_shared<HashEmbedder>(c.embedding_dimension);
}

} // namespace

ValidationError::ValidationError(ValidationReport report)
    : Error("ValidationFailed", summarize(report)), report_(std::move(report)) {}

std::string_view to_string(ConsultationState s) {
    switch (s) {
    case ConsultationState::Pending: return "pending";
    case ConsultationState::Complete: return "complete";
    case ConsultationState::Failed: return "failed";
    }
    return "pending";
}

Service::Service(ServiceConfig config, std::shared_ptr<const llm::CompletionBackend> backend)
    : config_(std::move(config)),
      registry_(config_.roster.empty() ? Registry::load_default() : Registry::load_file(config_.roster)),
      backend_(backend ? std::move(backend) : make_backend(config_)) {
    config_.validate();
    std::filesystem::create_directories(config_.store_dir);
    documents_ = std::make_unique<VectorStore>(VectorStore::open(config_.store_dir / "documents.log", make_embedder(config_)));
    store_ = std::make_unique<ServiceStore>(ServiceStore::open(config_.store_dir / "service.log", config_.durable));

    OrchestratorConfig oc;
    oc.parallelism = config_.parallelism;
    oc.agent_timeout_ms = config_.agent_timeout_ms;
    oc.retrieval_k = config_.retrieval_k;
    oc.synthesis_includes_all_roles = config_.synthesis_includes_all_roles;
    orchestrator_ = std::make_unique<Orchestrator>(registry_, *backend_, documents_.get(), oc);

    for (int i = 0; i < config_.consult_workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() {
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& w : workers_) w.join();
    {
        std::lock_guard lock(monitor_mutex_);
    }
    monitor_cv_.notify_all();
    if (monitor_.joinable()) monitor_.join();
}

// ------------------------------------------------------------------ cases

PatientCase Service::create_case(const PatientCase& c, const std::string& unit) {
    if (auto report = validate_case(c); !report.empty()) throw ValidationError(std::move(report));
    std::lock_guard lock(case_mutex_);
    if (store_->get_case(c.case_id)) throw Error("CaseExists", "case '" + c.case_id + "' already exists");
    store_->put_case(c);
    if (!unit.empty()) store_->assign_unit(c.case_id, unit);
    return c;
}

PatientCase Service::get_case(const std::string& case_id) const {
    auto c = store_->get_case(case_id);
    if (!c) throw Error("CaseNotFound", "no case '" + case_id + "'");
    return *c;
}

PatientCase Service::append_vitals(const std::string& case_id, const std::vector<VitalSigns>& vitals) {
    std::lock_guard lock(case_mutex_);
    auto c = get_case(case_id);
    c.vitals.insert(c.vitals.end(), vitals.begin(), vitals.end());
    if (auto report = validate_case(c); !report.empty()) throw ValidationError(std::move(report));
    store_->put_case(c);
    return c;
}

// ------------------------------------------------------------------ consultations

std::string Service::new_transcript_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return std::string("tx-") + buf;
}

void Service::enqueue(std::function<void()> job) {
    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) throw Error("ServiceStopping", "service is shutting down");
        queue_.push_back(std::move(job));
    }
    queue_cv_.notify_one();
}

void Service::worker_loop() {
    for (;;) {
        std::function<void()> job;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            job = std::move(queue_.front());
            queue_.pop_front();
            ++running_;
        }
        job();
        {
            std::lock_guard lock(queue_mutex_);
            --running_;
        }
        idle_cv_.notify_all();
    }
}

bool Service::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(queue_mutex_);
    return idle_cv_.wait_for(lock, timeout, [&] { return queue_.empty() && running_ == 0; });
}

Accepted Service::start(const PatientCase& c, std::string question, ConsultMode mode, RunOptions options,
                        const std::string& idempotency_key) {
    auto id = new_transcript_id();
    if (!idempotency_key.empty()) {
        const auto bound = store_->bind_idempotency_key(idempotency_key, id);
        if (bound != id) return {bound, true};
    }
    options.transcript_id = id;
    {
        std::lock_guard lock(queue_mutex_);
        pending_[id] = c.case_id;
    }
    std::optional<Transcript> prior;
    if (options.prior) prior = *options.prior;
    enqueue([this, c, question = std::move(question), mode, options, prior = std::move(prior), id]() mutable {
        if (prior) options.prior = &*prior;
        try {
            auto t = orchestrator_->run_consultation(c, question, mode, options);
            store_->put_transcript(t);
        } catch (const Error& e) {
            spdlog::error("consultation {} failed: {} ({})", id, e.what(), e.code());
            store_->put_failure({id, c.case_id, e.code(), e.what()});
        } catch (const std::exception& e) {
            spdlog::error("consultation {} failed: {}", id, e.what());
            store_->put_failure({id, c.case_id, "Internal", e.what()});
        }
        std::lock_guard lock(queue_mutex_);
        pending_.erase(id);
    });
    return {id, false};
}

Accepted Service::submit_consultation(const ConsultationRequest& req) {
    if (!req.idempotency_key.empty()) {
        if (auto id = store_->idempotent_id(req.idempotency_key)) return {*id, true};
    }
    const auto c = get_case(req.case_id);
    ConsultMode mode = req.mode.value_or(ConsultMode::TeamAssessment);
    std::string question = req.question;
    if (req.template_id) {
        const auto& t = registry_.find_template(*req.template_id);
        if (req.mode && *req.mode != t.id) {
            throw Error("BadMode", "template " + *req.template_id + " does not match mode " + std::string(to_string(*req.mode)));
        }
        mode = t.id;
        if (text::trim(question).empty()) question = registry_.instantiate_template(t.id, c);
    }
    if (!is_team_mode(mode)) throw Error("BadMode", std::string(to_string(mode)) + " is not a team consultation mode");
    for (const auto& role : req.team) (void)registry_.profile(role);
    if (text::trim(question).empty()) question = registry_.instantiate_template(mode, c);

    RunOptions options;
    options.team = req.team;
    return start(c, std::move(question), mode, std::move(options), req.idempotency_key);
}

Accepted Service::submit_followup(const std::string& transcript_id, const std::string& question,
                                  const std::string& idempotency_key) {
    if (!idempotency_key.empty()) {
        if (auto id = store_->idempotent_id(idempotency_key)) return {*id, true};
    }
    const auto status = consultation(transcript_id);
    if (status.state != ConsultationState::Complete) {
        throw Error("NotComplete", "consultation " + transcript_id + " is " + std::string(to_string(status.state)));
    }
    if (text::trim(question).empty()) throw Error("EmptyQuestion", "follow-up question must be nonempty");
    const auto& prior = *status.transcript;
    if (!is_team_mode(prior.mode)) throw Error("BadMode", "follow-ups continue team consultations only");
    RunOptions options;
    options.prior = &prior;
    for (const auto& r : prior.responses) options.team.push_back(r.role);
    return start(get_case(prior.case_id), question, prior.mode, std::move(options), idempotency_key);
}

ConsultationStatus Service::consultation(const std::string& transcript_id) const {
    ConsultationStatus s;
    s.transcript_id = transcript_id;
    if (auto t = store_->get_transcript(transcript_id)) {
        s.case_id = t->case_id;
        s.state = ConsultationState::Complete;
        s.transcript = std::move(t);
        return s;
    }
    if (auto f = store_->get_failure(transcript_id)) {
        s.case_id = f->case_id;
        s.state = ConsultationState::Failed;
        s.failure = std::move(f);
        return s;
    }
    std::lock_guard lock(queue_mutex_);
    if (auto it = pending_.find(transcript_id); it != pending_.end()) {
        s.case_id = it->second;
        return s;
    }
    throw Error("TranscriptNotFound", "no consultation '" + transcript_id + "'");
}

Transcript Service::specialist_consult(const std::string& case_id, const std::string& specialty,
                                       const std::string& question) {
    const auto c = get_case(case_id);
    auto t = orchestrator_->consult_specialist(specialty, c, question, new_transcript_id());
    store_->put_transcript(t);
    return t;
}

std::string Service::navigator_explain(const std::string& transcript_id) {
    const auto status = consultation(transcript_id);
    if (!status.transcript) {
        throw Error("MissingSynthesis", "consultation " + transcript_id + " has no completed synthesis");
    }
    return orchestrator_->navigator_explain(get_case(status.case_id), *status.transcript);
}

DischargeSummary Service::discharge_summary(const std::string& case_id) {
    const auto c = get_case(case_id);
    const auto transcripts = store_->transcripts_for_case(case_id);
    return orchestrator_->discharge_summary(c, transcripts);
}

// ------------------------------------------------------------------ risk

RiskEvaluation Service::evaluate_risk(const std::string& case_id) const {
    const auto c = get_case(case_id);
    if (c.vitals.empty()) throw Error("EmptySeries", "case '" + case_id + "' has no vitals");
    const auto& v = c.vitals.back();
    RiskEvaluation r;
    r.case_id = case_id;
    r.observed_at = v.timestamp;
    r.news = news::compute_news(v);
    r.recommendation = std::string(news::recommendation_for(r.news.band));
    return r;
}

std::vector<news::MonitorAlert> Service::alerts(const std::string& case_id) const {
    (void)get_case(case_id);
    return store_->alerts(case_id);
}

std::size_t Service::monitor_tick() {
    std::size_t created = 0;
    for (const auto& id : store_->case_ids()) {
        try {
            const auto c = store_->get_case(id);
            if (!c) continue;
            const auto cursor = store_->monitor_cursor(id);
            if (c->vitals.size() <= cursor) continue;
            if (auto report = validate_case(*c); !report.empty()) throw ValidationError(std::move(report));
            // The last consumed observation is the baseline for the new ones.
            const auto from = cursor == 0 ? 0 : cursor - 1;
            const auto alerts = news::evaluate_trend(id, std::span(c->vitals).subspan(from));
            store_->add_alerts(alerts);
            store_->set_monitor_cursor(id, c->vitals.size());
            created += alerts.size();
        } catch (const std::exception& e) {
            spdlog::warn("monitor: case {} skipped: {}", id, e.what());
        }
    }
    return created;
}

void Service::start_monitor() {
    if (monitor_.joinable()) return;
    monitor_ = std::thread([this] {
        std::unique_lock lock(monitor_mutex_);
        const auto interval = std::chrono::seconds(config_.monitor_interval_s);
        for (;;) {
            const bool stop = monitor_cv_.wait_for(lock, interval, [&] {
                std::lock_guard q(queue_mutex_);
                return stopping_;
            });
            if (stop) return;
            lock.unlock();
            if (const auto n = monitor_tick(); n > 0) spdlog::info("monitor: {} new alerts", n);
            lock.lock();
        }
    });
}

// ------------------------------------------------------------------ documents and digests

std::size_t Service::ingest(const std::string& doc_id, const std::string& title, const std::string& body,
                            std::size_t chunk_size, std::size_t overlap) {
    if (text::trim(doc_id).empty()) throw Error("BadDocument", "doc_id must be nonempty");
    return documents_->ingest(doc_id, title, body, chunk_size, overlap);
}

std::size_t Service::document_chunks() const { return documents_->size(); }

GapDigest Service::gap_digest(const std::string& unit_id) const {
    GapDigest d;
    d.unit_id = unit_id;
    d.case_ids = store_->unit_cases(unit_id);
    d.recipients = config_.digest_recipients;
    std::vector<GapReport> reports;
    for (const auto& id : d.case_ids) {
        const Transcript* latest = nullptr;
        const auto transcripts = store_->transcripts_for_case(id);
        for (const auto& t : transcripts) {
            if (t.gap_report && (!latest || t.created_at >= latest->created_at)) latest = &t;
        }
        if (latest) reports.push_back(*latest->gap_report);
    }
    d.report = merge_gap_reports(reports);
    return d;
}

} // namespace matec
