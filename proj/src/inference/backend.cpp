#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "cbfl/inference/inference.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cbfl::inference {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEmptyDocument = R"({"version": "cbfl-ir", "constraints": []})";

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string, std::less<>> parse_fixture(const std::string &text, const std::string &path) {
    std::map<std::string, std::string, std::less<>> out;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        return out;
    }
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw IoError("fixture file " + path + " is not a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) {
            throw IoError("fixture entry " + it.key() + " in " + path + " is not a string");
        }
        out.emplace(it.key(), it.value().get<std::string>());
    }
    return out;
}

bool is_json(std::string_view text) { return !nlohmann::json::parse(text, nullptr, false).is_discarded(); }

class FileLock {
public:
    explicit FileLock(const std::string &path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
            if (fd_ >= 0) {
                ::close(fd_);
            }
            throw IoError("cannot lock " + path);
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock &) = delete;
    FileLock &operator=(const FileLock &) = delete;

private:
    int fd_ = -1;
};

} // namespace

ReplayBackend::ReplayBackend(const std::string &fixture_path) {
    if (!fs::exists(fixture_path)) {
        throw IoError("replay fixture file not found: " + fixture_path);
    }
    entries_ = parse_fixture(read_file(fixture_path), fixture_path);
}

std::string ReplayBackend::complete(Namespace ns, const std::string &prompt, double) {
    std::string key = fixture_key(ns, prompt);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw FixtureMiss(key);
    }
    return it->second;
}

LiveConfig live_config_from_env() {
    LiveConfig c;
    auto get = [](const char *name, const char *fallback) {
        const char *v = std::getenv(name);
        return std::string(v != nullptr && *v != '\0' ? v : fallback);
    };
    c.api_key = get("CBFL_LLM_API_KEY", "");
    c.model = get("CBFL_LLM_MODEL", "");
    c.endpoint = get("CBFL_LLM_ENDPOINT", "https://api.openai.com/v1/chat/completions");
    return c;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
        throw BackendUnavailable("CBFL_LLM_API_KEY is not set");
    }
    if (config_.model.empty()) {
        throw BackendUnavailable("CBFL_LLM_MODEL is not set");
    }
}

std::string LiveBackend::complete(Namespace, const std::string &prompt, double temperature) {
    std::string url = config_.endpoint;
    std::size_t scheme_end = url.find("://");
    std::size_t path_begin = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
    std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(origin);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(30, 0);
    nlohmann::json body = {
        {"model", config_.model},
        {"temperature", temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendUnavailable("request to " + origin + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw BackendUnavailable("backend returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception &) {
        throw BackendUnavailable("unexpected backend response shape");
    }
}

std::string strip_code_fence(std::string_view text) {
    std::size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    std::size_t e = text.find_last_not_of(" \t\r\n");
    std::string_view t = text.substr(b, e - b + 1);
    if (t.substr(0, 3) != "```") {
        return std::string(t);
    }
    std::size_t first_nl = t.find('\n');
    if (first_nl == std::string_view::npos) {
        return {};
    }
    t.remove_prefix(first_nl + 1);
    if (t.size() >= 3 && t.substr(t.size() - 3) == "```") {
        t.remove_suffix(3);
    }
    while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) {
        t.remove_suffix(1);
    }
    return std::string(t);
}

std::string infer_constraints(const PromptBundle &prompt, GeneratorBackend &backend, double temperature) {
    std::string text = prompt.text();
    std::string reply = strip_code_fence(backend.complete(Namespace::Constraints, text, temperature));
    if (backend.kind() == BackendKind::Replay || is_json(reply)) {
        return reply;
    }
    spdlog::warn("backend output is not JSON, retrying once");
    reply = strip_code_fence(
        backend.complete(Namespace::Constraints, text + "\n" + std::string(kJsonReminder) + "\n", temperature));
    if (is_json(reply)) {
        return reply;
    }
    spdlog::warn("backend output is still not JSON, continuing with zero constraints");
    return std::string(kEmptyDocument);
}

bool record_fixture_entry(const std::string &path, const std::string &key, const std::string &response) {
    FileLock lock(path + ".lock");
    std::map<std::string, std::string, std::less<>> entries;
    if (fs::exists(path)) {
        entries = parse_fixture(read_file(path), path);
    }
    bool fresh = true;
    auto it = entries.find(key);
    if (it != entries.end()) {
        spdlog::warn("overwriting fixture entry {}", key);
        fresh = false;
    }
    entries[key] = response;
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[k, v] : entries) {
        j[k] = v;
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp);
        }
        out << j.dump(2) << "\n";
        if (!out) {
            throw IoError("cannot write " + tmp);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot replace " + path + ": " + ec.message());
    }
    return fresh;
}

bool record_fixture(const PromptBundle &prompt, const std::string &response, const std::string &path) {
    if (!is_json(response)) {
        throw Error("refusing to record a response that is not JSON");
    }
    return record_fixture_entry(path, prompt.hash(), response);
}

RecordingBackend::RecordingBackend(GeneratorBackend &inner, std::string fixture_path)
    : inner_(inner), path_(std::move(fixture_path)) {}

std::string RecordingBackend::complete(Namespace ns, const std::string &prompt, double temperature) {
    std::string reply = inner_.complete(ns, prompt, temperature);
    record_fixture_entry(path_, fixture_key(ns, prompt), reply);
    return reply;
}

} // namespace cbfl::inference
