#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scenelang/providers.hpp"
#include "scenelang/scene_info.hpp"

namespace scenelang {

struct ReflectionReport {
    enum class Kind { Caption, Relation };

    std::string item_id;  // "<object_id>" or "<subject>:<object>"
    Kind kind = Kind::Caption;
    double score = 0.0;
    bool replaced = false;
    std::string old_text;
    std::string new_text;
    std::string error;  // provider failure note; empty on success
};

// Rule-based judge for hermetic runs: a caption scores 1 iff it contains the
// object's label tokens; a relation scores 1 iff its sentence matches a
// re-run of the spatial reasoner on the same pair. Context strings are the
// JSON payloads produced by reflect().
std::unique_ptr<JudgeProvider> make_offline_judge(const Scene& scene, const PriorTable& priors,
                                                  const ReasonerConfig& cfg);

// Companion corrector: captions become "a <label>"; relation sentences are
// re-rendered from the recomputed triplet.
std::unique_ptr<CorrectorProvider> make_offline_corrector(const Scene& scene,
                                                          const PriorTable& priors,
                                                          const ReasonerConfig& cfg);

struct ReflectionOptions {
    double tau = 0.5;
    int max_in_flight = 4;
    // QA prompt choices offered to the judge when ground-truth labels exist.
    std::optional<std::map<int, std::string>> gt_labels;
};

// Single refinement pass: score every caption and relation sentence, then
// replace the ones scoring below tau with the corrector's output. Provider
// failures record score 0 and leave the item untouched. Reports cover every
// item in document order.
std::pair<SceneInformation, std::vector<ReflectionReport>> reflect(
    const SceneInformation& info, JudgeProvider& judge, CorrectorProvider& corrector,
    const ReflectionOptions& options);

void save_reports(const std::string& path, const std::vector<ReflectionReport>& reports);

} // namespace scenelang
