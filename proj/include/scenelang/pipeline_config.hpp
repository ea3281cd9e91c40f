#pragma once

#include <map>
#include <string>

#include "scenelang/providers.hpp"
#include "scenelang/scene_info.hpp"
#include "scenelang/spatial.hpp"

namespace scenelang {

// Runtime switches for the whole pipeline. Precedence: flag > config file >
// default; environment variables carry service credentials only.
struct PipelineConfig {
    ReasonerConfig reasoner;

    struct Selection {
        int k1 = 20;
        int k2 = 12;
        int rounds = 2;  // 0 = no filtering, 1, or 2
    } selection;

    struct Reflection {
        double tau = 0.5;
        int rounds = 1;  // capped at 3
    } reflection;

    struct Providers {
        std::string caption_endpoint;    // empty = offline
        std::string embedding_endpoint;  // empty = offline (hash embeddings)
        std::string judge_endpoint;      // empty = offline rule-based judge
        std::string corrector_endpoint;  // empty = offline corrector
        std::string candidates_path;     // offline candidate file
        int timeout_ms = 10000;
        int max_in_flight = 4;
    } providers;

    ExpressionMode mode = ExpressionMode::Complex;
    int jobs = 4;

    void validate() const;
};

// Minimal TOML subset: [section] headers, key = value lines with strings,
// integers, floats and booleans, and '#' comments. Unknown keys are errors.
PipelineConfig load_pipeline_config(const std::string& path);

HttpProviderConfig make_http_config(const PipelineConfig& cfg, const std::string& endpoint);

} // namespace scenelang
