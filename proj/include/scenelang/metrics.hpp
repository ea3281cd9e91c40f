#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scenelang/geometry.hpp"

namespace scenelang {

// Axis-aligned 3D box for grounding metrics.
struct Box3 {
    Vec3 center;
    Vec3 size;  // positive extents
};

double iou3(const Box3& a, const Box3& b);

// Fraction of (pred, gt) pairs with iou3 >= threshold. Pairs are index-
// aligned; throws LengthMismatch on unequal lengths.
double grounding_accuracy(const std::vector<Box3>& preds, const std::vector<Box3>& gts,
                          double threshold);

// Greedy one-to-one matching by descending IoU; matches at or above the
// threshold are true positives. Empty vs empty scores 1.0, one-sided empty 0.
double multi_object_f1(const std::vector<Box3>& preds, const std::vector<Box3>& gts,
                       double threshold);

// Lowercase, strip punctuation, collapse whitespace, drop a leading article.
std::string normalize_answer(const std::string& text);

int exact_match(const std::string& pred, const std::string& gt);

// EM, or the normalized ground truth contained in the normalized prediction.
int em_refined(const std::string& pred, const std::string& gt);

// Text metrics share one tokenizer: lowercase alnum/apostrophe runs.
// references[i] are the reference sentences for candidates[i]; all corpus
// scores throw LengthMismatch on ragged input and EmptyCorpus when there is
// nothing to score.

// Corpus BLEU-4 with epsilon smoothing on zero n-gram counts and the
// standard brevity penalty.
double bleu4(const std::vector<std::string>& candidates,
             const std::vector<std::vector<std::string>>& references);

// Mean sentence-level ROUGE-L F-measure (beta = 1.2), max over references.
double rouge_l(const std::vector<std::string>& candidates,
               const std::vector<std::vector<std::string>>& references);

// METEOR restricted to exact + Porter-stem unigram alignment with the
// fragmentation penalty (gamma 0.5, beta 3, alpha 0.9). Reported as
// "METEOR-s" because no synonym stage runs.
double meteor_simplified(const std::vector<std::string>& candidates,
                         const std::vector<std::vector<std::string>>& references);

// Consensus score over n = 1..4: corpus TF-IDF vectors compared by cosine,
// averaged over n and references, scaled by 10. Range [0, 10].
double cider(const std::vector<std::string>& candidates,
             const std::vector<std::vector<std::string>>& references);

// One step of an action-first plan: leading verb plus [label-id] references.
struct PlanStep {
    int index = 0;
    std::string action_verb;
    std::vector<std::pair<std::string, int>> target_refs;
    std::string raw_text;
};

// Splits numbered/newline steps, takes the first token as the verb and
// captures every [label-id] reference in order. Throws ParseError when a
// step has no verb token.
std::vector<PlanStep> parse_plan(const std::string& text);

struct PlanScore {
    int g_acc = 0;     // 1 iff ref-id unions match and every step matches
    double t_acc = 0;  // index-aligned matched steps / max(len(pred), len(gt))
};

// A step matches when its stemmed verb and its target ref id set equal the
// same-index reference step's.
PlanScore plan_scores(const std::vector<PlanStep>& pred, const std::vector<PlanStep>& gt);

// Plain-text report table; the header states the plan-metric definition.
std::string format_report(const std::map<std::string, double>& metrics);

} // namespace scenelang
