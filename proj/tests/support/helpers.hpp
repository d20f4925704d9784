#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>
#include <unistd.h>

#include "matec/json_codec.hpp"

#ifndef MATEC_SOURCE_DIR
#define MATEC_SOURCE_DIR "."
#endif

namespace testing {

inline std::filesystem::path source_dir() { return MATEC_SOURCE_DIR; }

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline matec::PatientCase load_case(const std::string& name) {
    return matec::case_from_json(matec::Json::parse(read_text(source_dir() / "fixtures" / "cases" / (name + ".json"))));
}

struct TemplateRow {
    std::string title;
    std::string body;
};

// The six FAQ template rows as pinned in the repository.
inline std::vector<TemplateRow> pinned_template_rows() {
    return {
        {"Team Assessment", "Assess the patient\u2019s condition from each team member\u2019s perspective. Identify key "
                            "concerns and recommendations from your specialty."},
        {"Care Gap Analysis", "Identify gaps in the current care plan, including potential improvements in diagnosis, "
                              "treatment, monitoring, and care coordination."},
        {"Differential Diagnosis Analysis", "Provide a differential diagnosis based on the patient's presentation and "
                                            "clinical findings, with reasoning and supporting evidence."},
        {"Treatment Plan", "Recommend a treatment plan, including immediate interventions and long-term management "
                           "strategies."},
        {"Antibiotic Management", "Determine the appropriate antibiotic regimen, considering local resistance patterns, "
                                  "patient factors, and current guidelines."},
        {"Pharmacy Assessment", "Assess medication management and pharmaceutical care considerations, including "
                                "medication safety and monitoring."},
    };
}

// Rows of the LaTeX template table in paper.md at the repository root, or the
// pinned rows when that file is absent.
inline std::vector<TemplateRow> reference_template_rows() {
    const auto file = source_dir() / "paper.md";
    if (!std::filesystem::exists(file)) return pinned_template_rows();
    const std::string open = "\\rule{0pt}{12pt} ";
    const std::string close = " \\rule[-6pt]";
    std::vector<TemplateRow> rows;
    std::istringstream in(read_text(file));
    for (std::string line; std::getline(in, line);) {
        const auto a = line.find(open);
        const auto amp = line.find(" & ", a == std::string::npos ? 0 : a);
        const auto b = line.find(close);
        if (a == std::string::npos || amp == std::string::npos || b == std::string::npos) continue;
        const auto title_at = a + open.size();
        rows.push_back({line.substr(title_at, amp - title_at), line.substr(amp + 3, b - amp - 3)});
    }
    return rows;
}

// Fresh directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("matec-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing
