#include "matec/store.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "matec/error.hpp"
#include "matec/json_codec.hpp"

namespace matec {

namespace {

enum RecordType : std::uint8_t {
    kCase = 1,
    kTranscript = 2,
    kAlert = 3,
    kIdempotency = 4,
    kUnit = 5,
    kCursor = 6,
    kFailure = 7,
};

} // namespace

struct ServiceStore::State {
    mutable std::shared_mutex mutex;
    std::map<std::string, PatientCase> cases;
    std::map<std::string, Transcript> transcripts;
    std::map<std::string, std::vector<std::string>> transcripts_by_case;
    std::map<std::string, FailedConsultation> failures;
    std::map<std::string, std::vector<news::MonitorAlert>> alerts;
    std::map<std::string, std::string> idempotency;
    std::map<std::string, std::set<std::string>> units;
    std::map<std::string, std::size_t> cursors;

    void apply(std::uint8_t type, const Json& j) {
        switch (type) {
        case kCase: {
            auto c = case_from_json(j);
            cases[c.case_id] = std::move(c);
            break;
        }
        case kTranscript: {
            auto t = transcript_from_json(j);
            auto& ids = transcripts_by_case[t.case_id];
            if (std::find(ids.begin(), ids.end(), t.transcript_id) == ids.end()) ids.push_back(t.transcript_id);
            transcripts[t.transcript_id] = std::move(t);
            break;
        }
        case kAlert: {
            auto a = news::alert_from_json(j);
            alerts[a.case_id].push_back(std::move(a));
            break;
        }
        case kIdempotency:
            idempotency.emplace(j.at("key").get<std::string>(), j.at("transcript_id").get<std::string>());
            break;
        case kUnit:
            units[j.at("unit").get<std::string>()].insert(j.at("case_id").get<std::string>());
            break;
        case kCursor:
            cursors[j.at("case_id").get<std::string>()] = j.at("n").get<std::size_t>();
            break;
        case kFailure:
            failures[j.at("transcript_id").get<std::string>()] =
                FailedConsultation{j.at("transcript_id").get<std::string>(), j.at("case_id").get<std::string>(),
                                   j.at("code").get<std::string>(), j.at("message").get<std::string>()};
            break;
        default:
            throw Error("CorruptRecord", "unknown service record type " + std::to_string(type));
        }
    }
};

ServiceStore::ServiceStore(RecordLog log, std::unique_ptr<State> state)
    : log_(std::make_unique<RecordLog>(std::move(log))), state_(std::move(state)) {}
ServiceStore::ServiceStore(ServiceStore&&) noexcept = default;
ServiceStore& ServiceStore::operator=(ServiceStore&&) noexcept = default;
ServiceStore::~ServiceStore() = default;

ServiceStore ServiceStore::open(const std::filesystem::path& file, bool durable, RecoveryReport* report) {
    auto state = std::make_unique<State>();
    RecoveryReport local;
    auto log = RecordLog::open(
        file,
        [&](const LogRecord& r) {
            Json j;
            try {
                j = Json::parse(r.payload);
                state->apply(r.type, j);
            } catch (const Error& e) {
                if (e.code() == "CorruptRecord") throw;
                throw Error("CorruptRecord", "record at offset " + std::to_string(r.offset) + ": " + e.what());
            } catch (const std::exception& e) {
                throw Error("CorruptRecord", "record at offset " + std::to_string(r.offset) + ": " + e.what());
            }
        },
        &local, durable);
    spdlog::info("store {}: recovered {} records ({} cases, {} transcripts)", file.string(), local.records,
                 state->cases.size(), state->transcripts.size());
    if (report) *report = local;
    return ServiceStore(std::move(log), std::move(state));
}

void ServiceStore::put_case(const PatientCase& c) {
    std::unique_lock lock(state_->mutex);
    log_->append(kCase, case_to_json(c).dump());
    state_->cases[c.case_id] = c;
}

std::optional<PatientCase> ServiceStore::get_case(const std::string& case_id) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->cases.find(case_id);
    if (it == state_->cases.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> ServiceStore::case_ids() const {
    std::shared_lock lock(state_->mutex);
    std::vector<std::string> out;
    for (const auto& [id, c] : state_->cases) out.push_back(id);
    return out;
}

void ServiceStore::put_transcript(const Transcript& t) {
    const auto payload = transcript_to_json(t).dump();
    std::unique_lock lock(state_->mutex);
    log_->append(kTranscript, payload);
    state_->apply(kTranscript, Json::parse(payload));
}

std::optional<Transcript> ServiceStore::get_transcript(const std::string& id) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->transcripts.find(id);
    if (it == state_->transcripts.end()) return std::nullopt;
    return it->second;
}

std::vector<Transcript> ServiceStore::transcripts_for_case(const std::string& case_id) const {
    std::shared_lock lock(state_->mutex);
    std::vector<Transcript> out;
    if (auto it = state_->transcripts_by_case.find(case_id); it != state_->transcripts_by_case.end()) {
        for (const auto& id : it->second) out.push_back(state_->transcripts.at(id));
    }
    return out;
}

std::size_t ServiceStore::transcript_count() const {
    std::shared_lock lock(state_->mutex);
    return state_->transcripts.size();
}

void ServiceStore::put_failure(const FailedConsultation& f) {
    const Json j{{"transcript_id", f.transcript_id}, {"case_id", f.case_id}, {"code", f.code}, {"message", f.message}};
    std::unique_lock lock(state_->mutex);
    log_->append(kFailure, j.dump());
    state_->failures[f.transcript_id] = f;
}

std::optional<FailedConsultation> ServiceStore::get_failure(const std::string& id) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->failures.find(id);
    if (it == state_->failures.end()) return std::nullopt;
    return it->second;
}

void ServiceStore::add_alerts(const std::vector<news::MonitorAlert>& alerts) {
    std::unique_lock lock(state_->mutex);
    for (const auto& a : alerts) {
        log_->append(kAlert, news::to_json(a).dump());
        state_->alerts[a.case_id].push_back(a);
    }
}

std::vector<news::MonitorAlert> ServiceStore::alerts(const std::string& case_id) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->alerts.find(case_id);
    return it == state_->alerts.end() ? std::vector<news::MonitorAlert>{} : it->second;
}

std::string ServiceStore::bind_idempotency_key(const std::string& key, const std::string& id) {
    std::unique_lock lock(state_->mutex);
    if (auto it = state_->idempotency.find(key); it != state_->idempotency.end()) return it->second;
    log_->append(kIdempotency, Json{{"key", key}, {"transcript_id", id}}.dump());
    state_->idempotency.emplace(key, id);
    return id;
}

std::optional<std::string> ServiceStore::idempotent_id(const std::string& key) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->idempotency.find(key);
    if (it == state_->idempotency.end()) return std::nullopt;
    return it->second;
}

void ServiceStore::assign_unit(const std::string& case_id, const std::string& unit) {
    std::unique_lock lock(state_->mutex);
    if (state_->units[unit].contains(case_id)) return;
    log_->append(kUnit, Json{{"case_id", case_id}, {"unit", unit}}.dump());
    state_->units[unit].insert(case_id);
}

std::vector<std::string> ServiceStore::unit_cases(const std::string& unit) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->units.find(unit);
    if (it == state_->units.end()) return {};
    return {it->second.begin(), it->second.end()};
}

void ServiceStore::set_monitor_cursor(const std::string& case_id, std::size_t n) {
    std::unique_lock lock(state_->mutex);
    log_->append(kCursor, Json{{"case_id", case_id}, {"n", n}}.dump());
    state_->cursors[case_id] = n;
}

std::size_t ServiceStore::monitor_cursor(const std::string& case_id) const {
    std::shared_lock lock(state_->mutex);
    auto it = state_->cursors.find(case_id);
    return it == state_->cursors.end() ? 0 : it->second;
}

} // namespace matec
