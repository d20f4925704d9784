// matec command-line entry point: serve, ingest, stats, demo.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "matec/embedder.hpp"
#include "matec/http_api.hpp"
#include "matec/json_codec.hpp"
#include "matec/mock_backend.hpp"
#include "matec/orchestrator.hpp"
#include "matec/service.hpp"
#include "matec/stats.hpp"

#ifndef MATEC_FIXTURE_DIR
#define MATEC_FIXTURE_DIR "fixtures"
#endif

namespace fs = std::filesystem;
using namespace matec;

namespace {

httplib::Server* g_server = nullptr;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("NotFound", "cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// A bare fixture name resolves under fixtures/cases.
fs::path resolve_case(const std::string& name) {
    if (fs::exists(name)) return name;
    for (const fs::path dir : {fs::path("fixtures"), fs::path(MATEC_FIXTURE_DIR)}) {
        const auto p = dir / "cases" / (name + ".json");
        if (fs::exists(p)) return p;
    }
    throw Error("NotFound", "no case fixture '" + name + "'");
}

std::vector<fs::path> corpus_files(const fs::path& path) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path)) {
            if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    return files;
}

int run_serve(const std::string& config_file) {
    auto config = ServiceConfig::load_file(config_file);
    Service service(config);
    httplib::Server server;
    mount_routes(server, service);
    service.start_monitor();
    g_server = &server;
    std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
    std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
    spdlog::info("listening on {}:{} (backend {})", config.host, config.port, service.backend().name());
    if (!server.listen(config.host, config.port)) {
        spdlog::error("cannot listen on {}:{}", config.host, config.port);
        return 1;
    }
    return 0;
}

int run_ingest(const std::string& input, const std::string& config_file, const std::string& store_dir,
               std::size_t chunk_size, std::size_t overlap) {
    fs::path dir = store_dir;
    std::shared_ptr<const Embedder> embedder = std::make_shared<HashEmbedder>();
    if (!config_file.empty()) {
        const auto config = ServiceConfig::load_file(config_file);
        dir = config.store_dir;
        embedder = std::make_shared<HashEmbedder>(config.embedding_dimension);
        if (config.embedder == "http") {
            HttpEmbedderConfig e{config.embedding_endpoint, config.embedding_model, {}, config.embedding_dimension};
            if (const char* key = std::getenv("MATEC_LLM_API_KEY")) e.api_key = key;
            embedder = std::make_shared<HttpEmbedder>(e);
        }
    }
    fs::create_directories(dir);
    auto store = VectorStore::open(dir / "documents.log", embedder);
    for (const auto& file : corpus_files(input)) {
        const auto n = store.ingest(file.stem().string(), file.filename().string(), read_file(file), chunk_size, overlap);
        std::cout << file.stem().string() << '\t' << n << " chunks\n";
    }
    std::cout << "store now holds " << store.size() << " chunks\n";
    return 0;
}

int run_stats(const std::string& input) {
    const auto ratings = stats::parse_ratings_csv(read_file(input));
    std::cout << stats::render_summary_table(stats::summarize_survey(ratings));
    return 0;
}

int run_demo(const std::string& case_name, std::uint64_t seed, const std::vector<std::string>& faults,
             const std::string& mode_name, const std::string& corpus, bool with_navigator) {
    const auto c = case_from_json(Json::parse(read_file(resolve_case(case_name))));
    auto script = llm::MockScript::default_script();
    for (const auto& f : faults) script.faults.push_back(llm::parse_fault(f));
    const llm::MockBackend backend(std::move(script), seed);
    const auto registry = Registry::load_default();

    VectorStore store(std::make_shared<HashEmbedder>());
    fs::path corpus_dir = corpus;
    if (corpus_dir.empty()) {
        for (const fs::path dir : {fs::path("fixtures"), fs::path(MATEC_FIXTURE_DIR)}) {
            if (fs::exists(dir / "corpus")) {
                corpus_dir = dir / "corpus";
                break;
            }
        }
    }
    if (!corpus_dir.empty()) {
        for (const auto& file : corpus_files(corpus_dir)) store.ingest(file.stem().string(), file.stem().string(), read_file(file));
    }

    OrchestratorConfig oc;
    const auto as_of = record_time(c);
    oc.clock = [as_of] { return as_of; };
    const Orchestrator orchestrator(registry, backend, &store, oc);
    const auto t = orchestrator.run_consultation(c, "", enum_from_string<ConsultMode>(mode_name));
    auto out = transcript_to_json(t);
    if (with_navigator && t.synthesis) out["navigator"] = orchestrator.navigator_explain(c, t);
    std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("matec"));

    CLI::App app{"matec: multi-agent sepsis consultation engine"};
    app.require_subcommand(1);
    std::string verbosity = "info";
    app.add_option("--log-level", verbosity, "trace, debug, info, warn, error, off");

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::string config_file;
    serve->add_option("--config", config_file, "service config JSON")->required()->check(CLI::ExistingFile);

    auto* ingest = app.add_subcommand("ingest", "add a document or a directory of documents to the store");
    std::string ingest_input, ingest_config, store_dir = "matec-data";
    std::size_t chunk_size = 1000, overlap = 200;
    ingest->add_option("file", ingest_input, "document or directory")->required()->check(CLI::ExistingPath);
    ingest->add_option("--config", ingest_config, "service config; its store_dir and embedder are used");
    ingest->add_option("--store-dir", store_dir, "store directory when no config is given");
    ingest->add_option("--chunk-size", chunk_size, "chunk size in characters");
    ingest->add_option("--overlap", overlap, "chunk overlap in characters");

    auto* stats_cmd = app.add_subcommand("stats", "summarize Likert survey ratings");
    std::string stats_input;
    stats_cmd->add_option("--input", stats_input, "CSV of question,rating rows")->required()->check(CLI::ExistingFile);

    auto* demo = app.add_subcommand("demo", "run one mock consultation and print the transcript");
    std::string demo_case, demo_mode = "TeamAssessment", demo_corpus;
    std::uint64_t seed = 0;
    std::vector<std::string> faults;
    bool with_navigator = false;
    demo->add_option("--case", demo_case, "case fixture name or path")->required();
    demo->add_option("--seed", seed, "mock seed");
    demo->add_option("--fault", faults, "fault injection, e.g. timeout:CriticalCare");
    demo->add_option("--mode", demo_mode, "consultation mode");
    demo->add_option("--corpus", demo_corpus, "reference corpus directory");
    demo->add_flag("--navigator", with_navigator, "append the patient navigator explanation");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(verbosity));

    try {
        if (*serve) return run_serve(config_file);
        if (*ingest) return run_ingest(ingest_input, ingest_config, store_dir, chunk_size, overlap);
        if (*stats_cmd) return run_stats(stats_input);
        if (*demo) return run_demo(demo_case, seed, faults, demo_mode, demo_corpus, with_navigator);
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
