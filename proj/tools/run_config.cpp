#include "run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "stdeep/error.hpp"

namespace stdeep::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void collect_keys(const CLI::App& app, std::set<std::string>& keys) {
    for (const auto* opt : app.get_options())
        if (!opt->get_lnames().empty()) keys.insert(opt->get_lnames().front());
    for (const auto* sub : app.get_subcommands({})) collect_keys(*sub, keys);
}

CLI::Option* find_option(CLI::App& cmd, const std::string& key) {
    for (CLI::App* app = &cmd; app != nullptr; app = app->get_parent())
        if (auto* opt = app->get_option_no_throw("--" + key)) return opt;
    return nullptr;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        out[key] = value;
    }
    return out;
}

void apply_config(CLI::App& root, CLI::App& cmd, const std::map<std::string, std::string>& entries) {
    std::set<std::string> known;
    collect_keys(root, known);
    for (const auto& [raw, value] : entries) {
        std::string key = raw;
        std::replace(key.begin(), key.end(), '_', '-');
        if (!known.count(key)) throw UsageError("unknown config key '" + key + "'");
        CLI::Option* opt = find_option(cmd, key);
        if (opt == nullptr || opt->count() > 0) continue;
        if (opt->get_expected_max() == 0) {
            // flag: accept the usual boolean spellings
            const bool on = value == "1" || value == "true" || value == "yes" || value == "on";
            if (!on && value != "0" && value != "false" && value != "no" && value != "off")
                throw UsageError("config key '" + key + "' expects a boolean");
            if (!on) continue;
            opt->add_result("true");
        } else {
            opt->add_result(value);
        }
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

namespace {

// numbers and lists keep their JSON type; anything else stays a string
json typed(const std::string& text) {
    if (text == "{}") return json::array();
    try {
        auto j = json::parse(text);
        if (j.is_number() || j.is_array() || j.is_boolean()) return j;
    } catch (const json::exception&) {
    }
    return text;
}

}  // namespace

json resolved_options(const CLI::App& cmd) {
    json out = json::object();
    for (const CLI::App* app = &cmd; app != nullptr; app = app->get_parent()) {
        for (const auto* opt : app->get_options()) {
            if (opt->get_lnames().empty()) continue;
            const std::string key = opt->get_lnames().front();
            if (key == "help" || key == "version" || key == "config" || out.contains(key)) continue;
            if (opt->get_expected_max() == 0) {
                out[key] = opt->count() > 0;
            } else if (opt->count() > 0) {
                const auto& r = opt->results();
                if (r.size() == 1 && opt->get_expected_max() == 1) {
                    out[key] = typed(r.front());
                } else {
                    json list = json::array();
                    for (const auto& v : r) list.push_back(typed(v));
                    out[key] = list;
                }
            } else {
                out[key] = typed(opt->get_default_str());
            }
        }
    }
    return out;
}

json provenance(const std::string& command, const json& config) {
    return json{{"tool", "stdeep"}, {"version", STDEEP_VERSION}, {"command", command}, {"config", config}};
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace stdeep::cli
