#include "scenelang/pipeline_config.hpp"

#include <algorithm>
#include <cctype>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"

namespace scenelang {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return {};
    }
    std::size_t end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

// Strips a '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') {
            in_string = !in_string;
        } else if (line[i] == '#' && !in_string) {
            return line.substr(0, i);
        }
    }
    return line;
}

struct TomlValue {
    std::string raw;
    int line = 0;

    std::string as_string(const std::string& key) const {
        if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
            return raw.substr(1, raw.size() - 2);
        }
        throw SchemaError("config key '" + key + "' expects a quoted string (line " +
                          std::to_string(line) + ")");
    }

    bool as_bool(const std::string& key) const {
        if (raw == "true") return true;
        if (raw == "false") return false;
        throw SchemaError("config key '" + key + "' expects true/false (line " +
                          std::to_string(line) + ")");
    }

    double as_double(const std::string& key) const {
        try {
            std::size_t used = 0;
            const double value = std::stod(raw, &used);
            if (used != raw.size()) {
                throw std::invalid_argument("trailing");
            }
            return value;
        } catch (const std::exception&) {
            throw SchemaError("config key '" + key + "' expects a number (line " +
                              std::to_string(line) + ")");
        }
    }

    int as_int(const std::string& key) const {
        try {
            std::size_t used = 0;
            const int value = std::stoi(raw, &used);
            if (used != raw.size()) {
                throw std::invalid_argument("trailing");
            }
            return value;
        } catch (const std::exception&) {
            throw SchemaError("config key '" + key + "' expects an integer (line " +
                              std::to_string(line) + ")");
        }
    }
};

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
    std::map<std::string, TomlValue> values;
    std::string section;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        ++line_no;
        const std::string line = trim(strip_comment(text.substr(start, end - start)));
        start = end + 1;
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw SchemaError("malformed section header at line " + std::to_string(line_no));
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw SchemaError("expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw SchemaError("expected key = value at line " + std::to_string(line_no));
        }
        const std::string full_key = section.empty() ? key : section + "." + key;
        values[full_key] = TomlValue{value, line_no};
    }
    return values;
}

} // namespace

void PipelineConfig::validate() const {
    reasoner.validate();
    if (selection.k1 < 1 || selection.k2 < 1) {
        throw ValidationError("selection k1 and k2 must be >= 1");
    }
    if (selection.k2 > selection.k1) {
        throw InvalidK("selection k2 must be <= k1");
    }
    if (selection.rounds < 0 || selection.rounds > 2) {
        throw ValidationError("selection rounds must be 0, 1, or 2");
    }
    if (reflection.tau < 0.0 || reflection.tau > 1.0) {
        throw ValidationError("reflection tau must be in [0, 1]");
    }
    if (reflection.rounds < 1 || reflection.rounds > 3) {
        throw ValidationError("reflection rounds must be in [1, 3]");
    }
    if (providers.max_in_flight < 1) {
        throw ValidationError("providers max_in_flight must be >= 1");
    }
    if (jobs < 1) {
        throw ValidationError("jobs must be >= 1");
    }
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig cfg;
    auto values = parse_toml(read_text_file(path));

    auto take = [&](const std::string& key) -> const TomlValue* {
        auto it = values.find(key);
        if (it == values.end()) {
            return nullptr;
        }
        return &it->second;
    };

    if (auto* v = take("mode")) cfg.mode = expression_mode_from_string(v->as_string("mode"));
    if (auto* v = take("jobs")) cfg.jobs = v->as_int("jobs");

    if (auto* v = take("reasoner.beta")) cfg.reasoner.beta = v->as_double("reasoner.beta");
    if (auto* v = take("reasoner.theta_tol_deg"))
        cfg.reasoner.theta_tol_deg = v->as_double("reasoner.theta_tol_deg");
    if (auto* v = take("reasoner.n_sectors"))
        cfg.reasoner.n_sectors = v->as_int("reasoner.n_sectors");
    if (auto* v = take("reasoner.saliency_m"))
        cfg.reasoner.saliency_m = v->as_int("reasoner.saliency_m");
    if (auto* v = take("reasoner.nearby_exclusive"))
        cfg.reasoner.nearby_exclusive = v->as_bool("reasoner.nearby_exclusive");
    if (auto* v = take("reasoner.vertical_axis")) {
        const std::string axis = v->as_string("reasoner.vertical_axis");
        if (axis == "camera_up") {
            cfg.reasoner.vertical_axis = VerticalAxis::CameraUp;
        } else if (axis == "world_up") {
            cfg.reasoner.vertical_axis = VerticalAxis::WorldUp;
        } else {
            throw SchemaError("reasoner.vertical_axis must be camera_up or world_up");
        }
    }

    if (auto* v = take("selection.k1")) cfg.selection.k1 = v->as_int("selection.k1");
    if (auto* v = take("selection.k2")) cfg.selection.k2 = v->as_int("selection.k2");
    if (auto* v = take("selection.rounds"))
        cfg.selection.rounds = v->as_int("selection.rounds");

    if (auto* v = take("reflection.tau")) cfg.reflection.tau = v->as_double("reflection.tau");
    if (auto* v = take("reflection.rounds"))
        cfg.reflection.rounds = v->as_int("reflection.rounds");

    if (auto* v = take("providers.caption_endpoint"))
        cfg.providers.caption_endpoint = v->as_string("providers.caption_endpoint");
    if (auto* v = take("providers.embedding_endpoint"))
        cfg.providers.embedding_endpoint = v->as_string("providers.embedding_endpoint");
    if (auto* v = take("providers.judge_endpoint"))
        cfg.providers.judge_endpoint = v->as_string("providers.judge_endpoint");
    if (auto* v = take("providers.corrector_endpoint"))
        cfg.providers.corrector_endpoint = v->as_string("providers.corrector_endpoint");
    if (auto* v = take("providers.candidates_path"))
        cfg.providers.candidates_path = v->as_string("providers.candidates_path");
    if (auto* v = take("providers.timeout_ms"))
        cfg.providers.timeout_ms = v->as_int("providers.timeout_ms");
    if (auto* v = take("providers.max_in_flight"))
        cfg.providers.max_in_flight = v->as_int("providers.max_in_flight");

    static const char* known[] = {
        "mode", "jobs",
        "reasoner.beta", "reasoner.theta_tol_deg", "reasoner.n_sectors",
        "reasoner.saliency_m", "reasoner.nearby_exclusive", "reasoner.vertical_axis",
        "selection.k1", "selection.k2", "selection.rounds",
        "reflection.tau", "reflection.rounds",
        "providers.caption_endpoint", "providers.embedding_endpoint",
        "providers.judge_endpoint", "providers.corrector_endpoint",
        "providers.candidates_path", "providers.timeout_ms", "providers.max_in_flight"};
    for (const auto& [key, value] : values) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
                return key == k;
            }) == std::end(known)) {
            throw SchemaError("unknown config key '" + key + "' (line " +
                              std::to_string(value.line) + ")");
        }
    }

    cfg.validate();
    return cfg;
}

HttpProviderConfig make_http_config(const PipelineConfig& cfg, const std::string& endpoint) {
    HttpProviderConfig http;
    http.endpoint = endpoint;
    http.timeout_ms = cfg.providers.timeout_ms;
    http.max_in_flight = cfg.providers.max_in_flight;
    return http;
}

} // namespace scenelang
