#pragma once

// Durable service state: cases, transcripts, alerts, idempotency keys, unit
// membership and monitor cursors, all replayed from one record log.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "matec/domain.hpp"
#include "matec/news.hpp"
#include "matec/record_log.hpp"

namespace matec {

struct FailedConsultation {
    std::string transcript_id;
    std::string case_id;
    std::string code;
    std::string message;
};

class ServiceStore {
public:
    // Throws CorruptRecord when the log is damaged before its tail.
    static ServiceStore open(const std::filesystem::path& file, bool durable = true, RecoveryReport* report = nullptr);

    ServiceStore(ServiceStore&&) noexcept;
    ServiceStore& operator=(ServiceStore&&) noexcept;
    ~ServiceStore();

    // Cases are stored whole; a later record for the same id replaces the
    // earlier one.
    void put_case(const PatientCase& c);
    std::optional<PatientCase> get_case(const std::string& case_id) const;
    std::vector<std::string> case_ids() const;

    void put_transcript(const Transcript& t);
    std::optional<Transcript> get_transcript(const std::string& id) const;
    std::vector<Transcript> transcripts_for_case(const std::string& case_id) const;
    std::size_t transcript_count() const;

    void put_failure(const FailedConsultation& f);
    std::optional<FailedConsultation> get_failure(const std::string& id) const;

    void add_alerts(const std::vector<news::MonitorAlert>& alerts);
    std::vector<news::MonitorAlert> alerts(const std::string& case_id) const;

    // Returns the transcript id already bound to `key`, or binds `id`.
    std::string bind_idempotency_key(const std::string& key, const std::string& id);
    std::optional<std::string> idempotent_id(const std::string& key) const;

    void assign_unit(const std::string& case_id, const std::string& unit);
    std::vector<std::string> unit_cases(const std::string& unit) const;

    // Number of vitals observations of a case the monitor has consumed.
    void set_monitor_cursor(const std::string& case_id, std::size_t n);
    std::size_t monitor_cursor(const std::string& case_id) const;

private:
    struct State;
    ServiceStore(RecordLog log, std::unique_ptr<State> state);

    std::unique_ptr<RecordLog> log_;
    std::unique_ptr<State> state_;
};

} // namespace matec
