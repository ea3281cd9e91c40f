#include "scenelang/reflection.hpp"

#include <algorithm>

#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

// True when the label's tokens appear consecutively in the text.
bool contains_label(const std::string& text, const std::string& label) {
    const std::vector<std::string> text_tokens = tokenize_lower(text);
    const std::vector<std::string> label_tokens = tokenize_lower(label);
    if (label_tokens.empty() || text_tokens.size() < label_tokens.size()) {
        return false;
    }
    for (std::size_t i = 0; i + label_tokens.size() <= text_tokens.size(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < label_tokens.size(); ++j) {
            if (text_tokens[i + j] != label_tokens[j]) {
                all = false;
                break;
            }
        }
        if (all) {
            return true;
        }
    }
    return false;
}

json parse_context(const std::string& context) {
    json parsed = json::parse(context, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        throw ProviderError("malformed reflection context");
    }
    return parsed;
}

class OfflineJudge : public JudgeProvider {
  public:
    OfflineJudge(Scene scene, PriorTable priors, ReasonerConfig cfg)
        : scene_(std::move(scene)), priors_(std::move(priors)), cfg_(cfg),
          index_(make_object_index(scene_)) {}

    double score(const std::string& kind, const std::string& text,
                 const std::string& context) override {
        const json ctx = parse_context(context);
        if (kind == "caption") {
            const int object_id = ctx.at("object_id").get<int>();
            const SceneObject* obj = scene_.find_object(object_id);
            if (obj == nullptr) {
                return 0.0;
            }
            return contains_label(text, obj->label) ? 1.0 : 0.0;
        }
        if (kind == "relation") {
            const int subject = ctx.at("subject").get<int>();
            const int object = ctx.at("object").get<int>();
            const ExpressionMode mode =
                expression_mode_from_string(ctx.at("mode").get<std::string>());
            return text == recompute_sentence(subject, object, mode) ? 1.0 : 0.0;
        }
        throw ProviderError("offline judge: unknown kind " + kind);
    }

  private:
    std::string recompute_sentence(int subject, int object, ExpressionMode mode) const {
        if (subject == object) {
            return render_coordinate_line(subject, index_);
        }
        const SceneObject* a = scene_.find_object(subject);
        const SceneObject* b = scene_.find_object(object);
        if (a == nullptr || b == nullptr) {
            return {};
        }
        return render_relation(relate_pair(*a, *b, scene_.camera, priors_, cfg_), index_, mode);
    }

    Scene scene_;
    PriorTable priors_;
    ReasonerConfig cfg_;
    ObjectIndex index_;

    friend class OfflineCorrector;
};

class OfflineCorrector : public CorrectorProvider {
  public:
    OfflineCorrector(Scene scene, PriorTable priors, ReasonerConfig cfg)
        : judge_(std::move(scene), std::move(priors), cfg) {}

    std::string correct(const std::string& text, const std::string& context) override {
        const json ctx = parse_context(context);
        const std::string kind = ctx.at("kind").get<std::string>();
        if (kind == "caption") {
            const int object_id = ctx.at("object_id").get<int>();
            const SceneObject* obj = judge_.scene_.find_object(object_id);
            if (obj == nullptr) {
                throw ProviderError("offline corrector: unknown object id " +
                                    std::to_string(object_id));
            }
            return "a " + obj->label;
        }
        if (kind == "relation") {
            const int subject = ctx.at("subject").get<int>();
            const int object = ctx.at("object").get<int>();
            const ExpressionMode mode =
                expression_mode_from_string(ctx.at("mode").get<std::string>());
            const std::string sentence = judge_.recompute_sentence(subject, object, mode);
            if (sentence.empty()) {
                throw ProviderError("offline corrector: cannot recompute relation " +
                                    std::to_string(subject) + ":" + std::to_string(object));
            }
            return sentence;
        }
        (void)text;
        throw ProviderError("offline corrector: unknown kind " + kind);
    }

  private:
    OfflineJudge judge_;
};

std::string caption_context(const SceneInformation& info, const CaptionEntry& entry,
                            const ReflectionOptions& options) {
    json ctx;
    ctx["kind"] = "caption";
    ctx["object_id"] = entry.object_id;
    ctx["mode"] = to_string(info.mode);
    std::string prompt = "Which object in the scene does this caption describe? Caption: \"" +
                         entry.text + "\"";
    if (options.gt_labels) {
        json choices = json::array();
        prompt += " Choices:";
        for (const auto& [id, label] : *options.gt_labels) {
            choices.push_back({{"object_id", id}, {"label", label}});
            prompt += " [" + label + "-" + std::to_string(id) + "]";
        }
        ctx["choices"] = std::move(choices);
    }
    ctx["prompt"] = prompt;
    return ctx.dump();
}

std::string relation_context(const SceneInformation& info, const RelationSentence& line) {
    json ctx;
    ctx["kind"] = "relation";
    ctx["subject"] = line.subject_id;
    ctx["object"] = line.object_id;
    ctx["mode"] = to_string(info.mode);
    return ctx.dump();
}

} // namespace

std::unique_ptr<JudgeProvider> make_offline_judge(const Scene& scene, const PriorTable& priors,
                                                  const ReasonerConfig& cfg) {
    return std::make_unique<OfflineJudge>(scene, priors, cfg);
}

std::unique_ptr<CorrectorProvider> make_offline_corrector(const Scene& scene,
                                                          const PriorTable& priors,
                                                          const ReasonerConfig& cfg) {
    return std::make_unique<OfflineCorrector>(scene, priors, cfg);
}

std::pair<SceneInformation, std::vector<ReflectionReport>> reflect(
    const SceneInformation& info, JudgeProvider& judge, CorrectorProvider& corrector,
    const ReflectionOptions& options) {
    if (options.tau < 0.0 || options.tau > 1.0) {
        throw ValidationError("tau must be in [0, 1]");
    }

    struct Item {
        ReflectionReport report;
        std::string context;
    };
    std::vector<Item> items;
    items.reserve(info.captions.size() + info.relations.size());
    for (const CaptionEntry& entry : info.captions) {
        Item item;
        item.report.item_id = std::to_string(entry.object_id);
        item.report.kind = ReflectionReport::Kind::Caption;
        item.report.old_text = entry.text;
        item.context = caption_context(info, entry, options);
        items.push_back(std::move(item));
    }
    for (const RelationSentence& line : info.relations) {
        Item item;
        item.report.item_id =
            std::to_string(line.subject_id) + ":" + std::to_string(line.object_id);
        item.report.kind = ReflectionReport::Kind::Relation;
        item.report.old_text = line.text;
        item.context = relation_context(info, line);
        items.push_back(std::move(item));
    }

    // Score everything first; replacements are applied afterwards so the
    // outcome does not depend on scoring order.
    run_parallel(static_cast<int>(items.size()), options.max_in_flight, [&](int i) {
        Item& item = items[static_cast<std::size_t>(i)];
        const char* kind =
            item.report.kind == ReflectionReport::Kind::Caption ? "caption" : "relation";
        try {
            item.report.score = judge.score(kind, item.report.old_text, item.context);
        } catch (const ProviderError& err) {
            item.report.score = 0.0;
            item.report.error = err.what();
        }
    });

    SceneInformation refined = info;
    for (std::size_t i = 0; i < items.size(); ++i) {
        Item& item = items[i];
        item.report.new_text = item.report.old_text;
        const bool needs_fix =
            item.report.error.empty() && item.report.score < options.tau;
        if (!needs_fix) {
            continue;
        }
        try {
            const std::string corrected =
                corrector.correct(item.report.old_text, item.context);
            if (corrected != item.report.old_text) {
                item.report.new_text = corrected;
                item.report.replaced = true;
            }
        } catch (const ProviderError& err) {
            item.report.error = err.what();
        }
        if (item.report.replaced) {
            if (i < info.captions.size()) {
                refined.captions[i].text = item.report.new_text;
            } else {
                refined.relations[i - info.captions.size()].text = item.report.new_text;
            }
        }
    }
    refined.token_estimate = count_tokens(to_text(refined));

    std::vector<ReflectionReport> reports;
    reports.reserve(items.size());
    for (Item& item : items) {
        reports.push_back(std::move(item.report));
    }
    return {std::move(refined), std::move(reports)};
}

void save_reports(const std::string& path, const std::vector<ReflectionReport>& reports) {
    json doc = json::array();
    for (const ReflectionReport& report : reports) {
        json entry;
        entry["item_id"] = report.item_id;
        entry["kind"] = report.kind == ReflectionReport::Kind::Caption ? "caption" : "relation";
        entry["score"] = report.score;
        entry["replaced"] = report.replaced;
        entry["old_text"] = report.old_text;
        entry["new_text"] = report.new_text;
        if (!report.error.empty()) {
            entry["error"] = report.error;
        }
        doc.push_back(std::move(entry));
    }
    write_json_file(path, doc);
}

} // namespace scenelang
