#include "scenelang/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "scenelang/errors.hpp"
#include "scenelang/providers.hpp"
#include "scenelang/stemmer.hpp"

namespace scenelang {

namespace {

constexpr double kBleuEpsilon = 1e-9;
constexpr double kRougeBeta = 1.2;
constexpr double kMeteorAlpha = 0.9;
constexpr double kMeteorBeta = 3.0;
constexpr double kMeteorGamma = 0.5;

using Tokens = std::vector<std::string>;
using NgramCounts = std::unordered_map<std::string, int>;

double overlap_1d(double center_a, double size_a, double center_b, double size_b) {
    const double lo = std::max(center_a - size_a / 2.0, center_b - size_b / 2.0);
    const double hi = std::min(center_a + size_a / 2.0, center_b + size_b / 2.0);
    return std::max(0.0, hi - lo);
}

void check_corpus(const std::vector<std::string>& candidates,
                  const std::vector<std::vector<std::string>>& references) {
    if (candidates.empty()) {
        throw EmptyCorpus("no candidates to score");
    }
    if (candidates.size() != references.size()) {
        throw LengthMismatch("candidates and references differ in length");
    }
    for (const auto& refs : references) {
        if (refs.empty()) {
            throw EmptyCorpus("sample without references");
        }
    }
}

// N-grams joined with '\x1f' so they can key a hash map.
NgramCounts ngram_counts(const Tokens& tokens, int n) {
    NgramCounts counts;
    if (static_cast<int>(tokens.size()) < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int j = 1; j < n; ++j) {
            key += '\x1f';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

int lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<int> prev(b.size() + 1, 0);
    std::vector<int> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l_single(const Tokens& cand, const Tokens& ref) {
    if (cand.empty() || ref.empty()) {
        return 0.0;
    }
    const double lcs = lcs_length(cand, ref);
    if (lcs == 0.0) {
        return 0.0;
    }
    const double recall = lcs / static_cast<double>(ref.size());
    const double precision = lcs / static_cast<double>(cand.size());
    const double b2 = kRougeBeta * kRougeBeta;
    return (1.0 + b2) * recall * precision / (recall + b2 * precision);
}

double meteor_single(const Tokens& cand, const Tokens& ref) {
    if (cand.empty() || ref.empty()) {
        return 0.0;
    }
    std::vector<int> cand_to_ref(cand.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);
    // Exact surface matches first, then stem matches, leftmost-first.
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (cand_to_ref[i] >= 0) {
                continue;
            }
            const std::string key = pass == 0 ? cand[i] : porter_stem(cand[i]);
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (ref_used[j]) {
                    continue;
                }
                const std::string rkey = pass == 0 ? ref[j] : porter_stem(ref[j]);
                if (key == rkey) {
                    cand_to_ref[i] = static_cast<int>(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    }
    int matches = 0;
    int chunks = 0;
    int prev_ref = -2;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (cand_to_ref[i] < 0) {
            prev_ref = -2;
            continue;
        }
        ++matches;
        if (cand_to_ref[i] != prev_ref + 1) {
            ++chunks;
        }
        prev_ref = cand_to_ref[i];
    }
    if (matches == 0) {
        return 0.0;
    }
    const double precision = static_cast<double>(matches) / cand.size();
    const double recall = static_cast<double>(matches) / ref.size();
    const double f_mean =
        precision * recall / (kMeteorAlpha * precision + (1.0 - kMeteorAlpha) * recall);
    const double penalty =
        kMeteorGamma * std::pow(static_cast<double>(chunks) / matches, kMeteorBeta);
    return f_mean * (1.0 - penalty);
}

} // namespace

double iou3(const Box3& a, const Box3& b) {
    const double ix = overlap_1d(a.center.x, a.size.x, b.center.x, b.size.x);
    const double iy = overlap_1d(a.center.y, a.size.y, b.center.y, b.size.y);
    const double iz = overlap_1d(a.center.z, a.size.z, b.center.z, b.size.z);
    const double inter = ix * iy * iz;
    const double vol_a = a.size.x * a.size.y * a.size.z;
    const double vol_b = b.size.x * b.size.y * b.size.z;
    const double uni = vol_a + vol_b - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

double grounding_accuracy(const std::vector<Box3>& preds, const std::vector<Box3>& gts,
                          double threshold) {
    if (preds.size() != gts.size()) {
        throw LengthMismatch("prediction and ground-truth counts differ");
    }
    if (preds.empty()) {
        throw EmptyCorpus("no grounding pairs to score");
    }
    int hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (iou3(preds[i], gts[i]) >= threshold) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double multi_object_f1(const std::vector<Box3>& preds, const std::vector<Box3>& gts,
                       double threshold) {
    if (preds.empty() && gts.empty()) {
        return 1.0;
    }
    if (preds.empty() || gts.empty()) {
        return 0.0;
    }
    struct Pair {
        double iou;
        int pred;
        int gt;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < preds.size(); ++p) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double iou = iou3(preds[p], gts[g]);
            if (iou >= threshold) {
                pairs.push_back({iou, static_cast<int>(p), static_cast<int>(g)});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.iou != b.iou) {
            return a.iou > b.iou;
        }
        return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt);
    });
    std::vector<bool> pred_used(preds.size(), false);
    std::vector<bool> gt_used(gts.size(), false);
    int tp = 0;
    for (const Pair& pair : pairs) {
        if (pred_used[static_cast<std::size_t>(pair.pred)] ||
            gt_used[static_cast<std::size_t>(pair.gt)]) {
            continue;
        }
        pred_used[static_cast<std::size_t>(pair.pred)] = true;
        gt_used[static_cast<std::size_t>(pair.gt)] = true;
        ++tp;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(preds.size());
    const double recall = static_cast<double>(tp) / static_cast<double>(gts.size());
    if (precision + recall == 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

std::string normalize_answer(const std::string& text) {
    Tokens tokens = tokenize_lower(text);
    // tokenize_lower keeps apostrophes; drop them here too.
    for (std::string& token : tokens) {
        token.erase(std::remove(token.begin(), token.end(), '\''), token.end());
    }
    tokens.erase(std::remove_if(tokens.begin(), tokens.end(),
                                [](const std::string& t) { return t.empty(); }),
                 tokens.end());
    if (!tokens.empty() &&
        (tokens.front() == "a" || tokens.front() == "an" || tokens.front() == "the")) {
        tokens.erase(tokens.begin());
    }
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += tokens[i];
    }
    return out;
}

int exact_match(const std::string& pred, const std::string& gt) {
    return normalize_answer(pred) == normalize_answer(gt) ? 1 : 0;
}

int em_refined(const std::string& pred, const std::string& gt) {
    if (exact_match(pred, gt)) {
        return 1;
    }
    const std::string npred = normalize_answer(pred);
    const std::string ngt = normalize_answer(gt);
    if (ngt.empty()) {
        return 0;
    }
    return npred.find(ngt) != std::string::npos ? 1 : 0;
}

double bleu4(const std::vector<std::string>& candidates,
             const std::vector<std::vector<std::string>>& references) {
    check_corpus(candidates, references);
    double matches[4] = {0, 0, 0, 0};
    double totals[4] = {0, 0, 0, 0};
    long long cand_len = 0;
    long long ref_len = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Tokens cand = tokenize_lower(candidates[i]);
        std::vector<Tokens> refs;
        refs.reserve(references[i].size());
        for (const std::string& r : references[i]) {
            refs.push_back(tokenize_lower(r));
        }
        cand_len += static_cast<long long>(cand.size());
        // Closest reference length; ties resolved toward the shorter one.
        long long best_ref = static_cast<long long>(refs.front().size());
        for (const Tokens& r : refs) {
            const auto len = static_cast<long long>(r.size());
            const auto cl = static_cast<long long>(cand.size());
            if (std::llabs(len - cl) < std::llabs(best_ref - cl) ||
                (std::llabs(len - cl) == std::llabs(best_ref - cl) && len < best_ref)) {
                best_ref = len;
            }
        }
        ref_len += best_ref;
        for (int n = 1; n <= 4; ++n) {
            const NgramCounts cand_counts = ngram_counts(cand, n);
            NgramCounts max_ref_counts;
            for (const Tokens& r : refs) {
                for (const auto& [ngram, count] : ngram_counts(r, n)) {
                    max_ref_counts[ngram] = std::max(max_ref_counts[ngram], count);
                }
            }
            for (const auto& [ngram, count] : cand_counts) {
                auto it = max_ref_counts.find(ngram);
                if (it != max_ref_counts.end()) {
                    matches[n - 1] += std::min(count, it->second);
                }
            }
            totals[n - 1] +=
                std::max<long long>(0, static_cast<long long>(cand.size()) - n + 1);
        }
    }
    if (cand_len == 0) {
        return 0.0;
    }
    double log_sum = 0.0;
    for (int n = 0; n < 4; ++n) {
        const double p =
            totals[n] > 0.0 ? std::max(matches[n], kBleuEpsilon) / totals[n] : kBleuEpsilon;
        log_sum += 0.25 * std::log(p);
    }
    const double bp =
        cand_len >= ref_len ? 1.0
                            : std::exp(1.0 - static_cast<double>(ref_len) /
                                                 static_cast<double>(cand_len));
    return bp * std::exp(log_sum);
}

double rouge_l(const std::vector<std::string>& candidates,
               const std::vector<std::vector<std::string>>& references) {
    check_corpus(candidates, references);
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Tokens cand = tokenize_lower(candidates[i]);
        double best = 0.0;
        for (const std::string& r : references[i]) {
            best = std::max(best, rouge_l_single(cand, tokenize_lower(r)));
        }
        total += best;
    }
    return total / static_cast<double>(candidates.size());
}

double meteor_simplified(const std::vector<std::string>& candidates,
                         const std::vector<std::vector<std::string>>& references) {
    check_corpus(candidates, references);
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Tokens cand = tokenize_lower(candidates[i]);
        double best = 0.0;
        for (const std::string& r : references[i]) {
            best = std::max(best, meteor_single(cand, tokenize_lower(r)));
        }
        total += best;
    }
    return total / static_cast<double>(candidates.size());
}

double cider(const std::vector<std::string>& candidates,
             const std::vector<std::vector<std::string>>& references) {
    check_corpus(candidates, references);
    const std::size_t corpus_size = candidates.size();

    // Document frequency per n: in how many samples' reference sets does the
    // n-gram occur.
    std::vector<NgramCounts> df(4);
    for (const auto& refs : references) {
        std::vector<std::set<std::string>> seen(4);
        for (const std::string& r : refs) {
            const Tokens tokens = tokenize_lower(r);
            for (int n = 1; n <= 4; ++n) {
                for (const auto& [ngram, count] : ngram_counts(tokens, n)) {
                    seen[static_cast<std::size_t>(n - 1)].insert(ngram);
                }
            }
        }
        for (int n = 0; n < 4; ++n) {
            for (const std::string& ngram : seen[static_cast<std::size_t>(n)]) {
                ++df[static_cast<std::size_t>(n)][ngram];
            }
        }
    }
    const double log_corpus = std::log(static_cast<double>(corpus_size));

    auto tfidf = [&](const Tokens& tokens, int n) {
        NgramCounts counts = ngram_counts(tokens, n);
        std::unordered_map<std::string, double> vec;
        for (const auto& [ngram, count] : counts) {
            auto it = df[static_cast<std::size_t>(n - 1)].find(ngram);
            const double d = it == df[static_cast<std::size_t>(n - 1)].end()
                                 ? 1.0
                                 : static_cast<double>(it->second);
            vec[ngram] = count * (log_corpus - std::log(std::max(1.0, d)));
        }
        return vec;
    };
    auto cosine = [](const std::unordered_map<std::string, double>& a,
                     const std::unordered_map<std::string, double>& b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (const auto& [ngram, value] : a) {
            na += value * value;
            auto it = b.find(ngram);
            if (it != b.end()) {
                dot += value * it->second;
            }
        }
        for (const auto& [ngram, value] : b) {
            nb += value * value;
        }
        if (na == 0.0 || nb == 0.0) {
            return 0.0;
        }
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };

    double total = 0.0;
    for (std::size_t i = 0; i < corpus_size; ++i) {
        const Tokens cand = tokenize_lower(candidates[i]);
        double sample = 0.0;
        for (int n = 1; n <= 4; ++n) {
            const auto cand_vec = tfidf(cand, n);
            double ref_mean = 0.0;
            for (const std::string& r : references[i]) {
                ref_mean += cosine(cand_vec, tfidf(tokenize_lower(r), n));
            }
            sample += ref_mean / static_cast<double>(references[i].size());
        }
        total += 10.0 * sample / 4.0;
    }
    return total / static_cast<double>(corpus_size);
}

std::vector<PlanStep> parse_plan(const std::string& text) {
    std::vector<PlanStep> steps;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        // Strip leading whitespace and "3." / "3)" / "3:" numbering.
        std::size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) {
            continue;
        }
        std::size_t digits = pos;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) {
            ++digits;
        }
        if (digits > pos && digits < line.size() &&
            (line[digits] == '.' || line[digits] == ')' || line[digits] == ':')) {
            pos = digits + 1;
        }
        const std::string body = line.substr(pos);
        if (body.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }

        PlanStep step;
        step.index = static_cast<int>(steps.size());
        step.raw_text = body;
        const Tokens tokens = tokenize_lower(body);
        if (tokens.empty() ||
            tokens.front().find_first_not_of("0123456789") == std::string::npos) {
            throw ParseError("plan step has no verb token: " + line);
        }
        step.action_verb = tokens.front();

        for (std::size_t open = body.find('['); open != std::string::npos;
             open = body.find('[', open + 1)) {
            const std::size_t close = body.find(']', open + 1);
            if (close == std::string::npos) {
                break;
            }
            const std::string ref = body.substr(open + 1, close - open - 1);
            const std::size_t dash = ref.rfind('-');
            if (dash == std::string::npos || dash == 0 || dash + 1 >= ref.size()) {
                continue;
            }
            const std::string id_part = ref.substr(dash + 1);
            if (id_part.find_first_not_of("0123456789") != std::string::npos) {
                continue;
            }
            std::string label;
            for (char c : ref.substr(0, dash)) {
                label.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            }
            step.target_refs.emplace_back(label, std::stoi(id_part));
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

PlanScore plan_scores(const std::vector<PlanStep>& pred, const std::vector<PlanStep>& gt) {
    PlanScore score;
    if (pred.empty() && gt.empty()) {
        score.g_acc = 1;
        score.t_acc = 1.0;
        return score;
    }
    auto ref_ids = [](const PlanStep& step) {
        std::set<int> ids;
        for (const auto& [label, id] : step.target_refs) {
            ids.insert(id);
        }
        return ids;
    };
    const std::size_t common = std::min(pred.size(), gt.size());
    std::size_t matched = 0;
    for (std::size_t i = 0; i < common; ++i) {
        if (porter_stem(pred[i].action_verb) == porter_stem(gt[i].action_verb) &&
            ref_ids(pred[i]) == ref_ids(gt[i])) {
            ++matched;
        }
    }
    const std::size_t span = std::max(pred.size(), gt.size());
    score.t_acc = static_cast<double>(matched) / static_cast<double>(span);

    std::set<int> pred_union;
    std::set<int> gt_union;
    for (const PlanStep& step : pred) {
        for (const auto& [label, id] : step.target_refs) {
            pred_union.insert(id);
        }
    }
    for (const PlanStep& step : gt) {
        for (const auto& [label, id] : step.target_refs) {
            gt_union.insert(id);
        }
    }
    score.g_acc = (pred_union == gt_union && matched == span) ? 1 : 0;
    return score;
}

std::string format_report(const std::map<std::string, double>& metrics) {
    std::ostringstream out;
    out << "metric report\n";
    out << "g_acc: plan-level; 1 iff ref-id unions match and every index-aligned step\n";
    out << "       matches (stemmed verb + target ref id set). t_acc: matched steps /\n";
    out << "       max(len(pred), len(gt)). meteor is METEOR-s (exact + stem only).\n";
    out << "----------------------------------------\n";
    for (const auto& [name, value] : metrics) {
        out << name;
        for (std::size_t i = name.size(); i < 24; ++i) {
            out << ' ';
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", value);
        out << buf << "\n";
    }
    return out.str();
}

} // namespace scenelang
