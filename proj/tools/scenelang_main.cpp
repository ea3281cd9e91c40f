// scenelang: deterministic 3D-scene-to-language pipeline.
//
// Stages communicate only through files so every run is reproducible and
// resumable: synth -> parse -> describe -> reflect -> select -> eval.
// Exit codes: 0 ok, 2 validation/schema error, 3 I/O error, 4 provider error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scenelang/captions.hpp"
#include "scenelang/errors.hpp"
#include "scenelang/io_util.hpp"
#include "scenelang/metrics.hpp"
#include "scenelang/pipeline_config.hpp"
#include "scenelang/projection.hpp"
#include "scenelang/providers.hpp"
#include "scenelang/reflection.hpp"
#include "scenelang/scene.hpp"
#include "scenelang/scene_info.hpp"
#include "scenelang/selection.hpp"
#include "scenelang/spatial.hpp"

namespace sl = scenelang;
using nlohmann::json;

namespace {

sl::Vec3 parse_extent(const std::string& text) {
    sl::Vec3 v;
    char comma1 = 0, comma2 = 0;
    std::istringstream in(text);
    if (!(in >> v.x >> comma1 >> v.y >> comma2 >> v.z) || comma1 != ',' || comma2 != ',') {
        throw sl::ValidationError("expected --room as x,y,z: " + text);
    }
    return v;
}

// Evenly spaced cameras on the room boundary, all looking at the center.
std::vector<sl::View> make_synth_views(const sl::Vec3& room, int count) {
    std::vector<sl::View> views;
    const double radius = std::max(room.x, room.y) / 2.0;
    for (int i = 0; i < count; ++i) {
        const double angle = 2.0 * 3.14159265358979323846 * i / count;
        sl::View view;
        view.frame_id = i;
        view.camera.position = {radius * std::cos(angle), radius * std::sin(angle), 0.0};
        view.camera.forward = sl::normalized(sl::Vec3{0.0, 0.0, 0.0} - view.camera.position);
        view.camera.up = {0.0, 0.0, 1.0};
        view.camera.intrinsics = sl::Intrinsics{500.0, 500.0, 320.0, 240.0};
        view.camera.image_size = {{640, 480}};
        views.push_back(std::move(view));
    }
    return views;
}

struct EvalSample {
    json pred;
    json gt;
};

std::vector<EvalSample> load_predictions(const std::string& path) {
    const std::string text = sl::read_text_file(path);
    std::vector<EvalSample> samples;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw sl::SchemaError("invalid JSON record at line " + std::to_string(line_no) +
                                  " of " + path);
        }
        EvalSample sample;
        if (!record.contains("pred") || !record.contains("gt")) {
            throw sl::SchemaError("record needs 'pred' and 'gt' at line " +
                                  std::to_string(line_no));
        }
        sample.pred = record["pred"];
        sample.gt = record["gt"];
        samples.push_back(std::move(sample));
    }
    if (samples.empty()) {
        throw sl::EmptyCorpus("no records in " + path);
    }
    return samples;
}

sl::Box3 parse_box(const json& value) {
    sl::Box3 box;
    const auto center = value.at("center").get<std::vector<double>>();
    const auto size = value.at("size").get<std::vector<double>>();
    if (center.size() != 3 || size.size() != 3) {
        throw sl::SchemaError("box needs 3-element center and size");
    }
    box.center = {center[0], center[1], center[2]};
    box.size = {size[0], size[1], size[2]};
    return box;
}

std::vector<std::string> parse_refs(const json& value) {
    if (value.is_string()) {
        return {value.get<std::string>()};
    }
    if (value.is_array()) {
        std::vector<std::string> refs;
        for (const json& item : value) {
            refs.push_back(item.get<std::string>());
        }
        if (refs.empty()) {
            throw sl::SchemaError("empty reference list");
        }
        return refs;
    }
    throw sl::SchemaError("references must be a string or string array");
}

std::map<std::string, double> run_eval(const std::string& metric, double threshold,
                                       const std::vector<EvalSample>& samples) {
    std::map<std::string, double> report;
    const auto text_corpus = [&]() {
        std::vector<std::string> candidates;
        std::vector<std::vector<std::string>> references;
        for (const EvalSample& s : samples) {
            candidates.push_back(s.pred.get<std::string>());
            references.push_back(parse_refs(s.gt));
        }
        return std::make_pair(candidates, references);
    };

    if (metric == "acc") {
        std::vector<sl::Box3> preds, gts;
        for (const EvalSample& s : samples) {
            preds.push_back(parse_box(s.pred));
            gts.push_back(parse_box(s.gt));
        }
        report["acc@" + std::to_string(threshold).substr(0, 4)] =
            sl::grounding_accuracy(preds, gts, threshold);
    } else if (metric == "f1") {
        double total = 0.0;
        for (const EvalSample& s : samples) {
            std::vector<sl::Box3> preds, gts;
            for (const json& b : s.pred) preds.push_back(parse_box(b));
            for (const json& b : s.gt) gts.push_back(parse_box(b));
            total += sl::multi_object_f1(preds, gts, threshold);
        }
        report["f1@" + std::to_string(threshold).substr(0, 4)] =
            total / static_cast<double>(samples.size());
    } else if (metric == "em" || metric == "em_r") {
        double em_total = 0.0, emr_total = 0.0;
        for (const EvalSample& s : samples) {
            const std::string pred = s.pred.get<std::string>();
            int em_best = 0, emr_best = 0;
            for (const std::string& ref : parse_refs(s.gt)) {
                em_best = std::max(em_best, sl::exact_match(pred, ref));
                emr_best = std::max(emr_best, sl::em_refined(pred, ref));
            }
            em_total += em_best;
            emr_total += emr_best;
        }
        report["em"] = em_total / static_cast<double>(samples.size());
        report["em_r"] = emr_total / static_cast<double>(samples.size());
    } else if (metric == "bleu4") {
        auto [candidates, references] = text_corpus();
        report["bleu4"] = sl::bleu4(candidates, references);
    } else if (metric == "rouge_l") {
        auto [candidates, references] = text_corpus();
        report["rouge_l"] = sl::rouge_l(candidates, references);
    } else if (metric == "meteor") {
        auto [candidates, references] = text_corpus();
        report["meteor_s"] = sl::meteor_simplified(candidates, references);
    } else if (metric == "cider") {
        auto [candidates, references] = text_corpus();
        report["cider"] = sl::cider(candidates, references);
    } else if (metric == "text") {
        auto [candidates, references] = text_corpus();
        report["bleu4"] = sl::bleu4(candidates, references);
        report["rouge_l"] = sl::rouge_l(candidates, references);
        report["meteor_s"] = sl::meteor_simplified(candidates, references);
        report["cider"] = sl::cider(candidates, references);
    } else if (metric == "plan") {
        double g_total = 0.0, t_total = 0.0;
        for (const EvalSample& s : samples) {
            const auto pred = sl::parse_plan(s.pred.get<std::string>());
            const auto gt = sl::parse_plan(s.gt.get<std::string>());
            const sl::PlanScore score = sl::plan_scores(pred, gt);
            g_total += score.g_acc;
            t_total += score.t_acc;
        }
        report["g_acc"] = g_total / static_cast<double>(samples.size());
        report["t_acc"] = t_total / static_cast<double>(samples.size());
    } else {
        throw sl::ValidationError("unknown metric: " + metric);
    }
    return report;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"scenelang: parse 3D indoor scenes into structured natural language"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    int jobs = 0;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "pipeline config file (TOML)");
    app.add_option("--jobs", jobs, "worker cap for provider calls");
    app.add_option("--seed", seed, "seed for synthetic generation");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a deterministic synthetic scene");
    int synth_objects = 10;
    std::string synth_room = "6,6,3";
    std::string synth_out;
    int synth_views = 0;
    synth->add_option("--objects", synth_objects, "number of objects")->check(CLI::PositiveNumber);
    synth->add_option("--room", synth_room, "room extents as x,y,z meters");
    synth->add_option("--views", synth_views, "also emit N posed views with intrinsics");
    synth->add_option("--out", synth_out, "output scene file")->required();

    // parse
    auto* parse = app.add_subcommand("parse", "build the spatial relation graph");
    std::string parse_scene, parse_priors, parse_out;
    double flag_beta = 0.0, flag_theta_tol = 0.0;
    int flag_sectors = 0, flag_saliency = 0;
    std::string flag_vertical_axis;
    bool flag_nearby_inclusive = false;
    parse->add_option("--scene", parse_scene, "scene file")->required();
    parse->add_option("--priors", parse_priors, "prior rule table");
    parse->add_option("--out", parse_out, "output graph file")->required();
    auto* beta_opt = parse->add_option("--beta", flag_beta, "proximity factor");
    auto* tol_opt = parse->add_option("--theta-tol", flag_theta_tol, "angular tolerance, deg");
    auto* sectors_opt = parse->add_option("--sectors", flag_sectors, "o'clock sector count");
    auto* saliency_opt = parse->add_option("--saliency", flag_saliency, "neighbors per object");
    auto* incl_opt = parse->add_flag("--nearby-inclusive", flag_nearby_inclusive,
                                     "emit directional tags for nearby pairs too");
    auto* axis_opt = parse->add_option("--vertical-axis", flag_vertical_axis,
                                       "camera_up or world_up");

    // describe
    auto* describe = app.add_subcommand("describe", "caption objects and emit scene information");
    std::string desc_scene, desc_graph, desc_candidates, desc_out, desc_captions_out,
        desc_txt, desc_crops;
    std::string desc_mode;
    int desc_max_views = 5;
    describe->add_option("--scene", desc_scene, "scene file")->required();
    describe->add_option("--graph", desc_graph, "relation graph file")->required();
    describe->add_option("--candidates", desc_candidates, "offline caption candidate file");
    describe->add_option("--out", desc_out, "output scene information file")->required();
    describe->add_option("--captions-out", desc_captions_out, "also write fused captions");
    describe->add_option("--txt", desc_txt, "also write the flat text rendering");
    describe->add_option("--crops", desc_crops, "write a crop manifest from the scene views");
    describe->add_option("--max-views", desc_max_views, "crops per object");
    auto* desc_mode_opt = describe->add_option("--mode", desc_mode,
                                               "coordinate, simple, or complex");

    // reflect
    auto* reflect_cmd = app.add_subcommand("reflect", "score and repair scene information");
    std::string refl_scene, refl_info, refl_priors, refl_out, refl_reports;
    double flag_tau = -1.0;
    int flag_rounds = 0;
    bool refl_gt = false;
    reflect_cmd->add_option("--scene", refl_scene, "scene file")->required();
    reflect_cmd->add_option("--info", refl_info, "scene information file")->required();
    reflect_cmd->add_option("--priors", refl_priors, "prior rule table");
    reflect_cmd->add_option("--out", refl_out, "refined scene information file")->required();
    reflect_cmd->add_option("--reports", refl_reports, "reflection report file");
    reflect_cmd->add_flag("--gt", refl_gt,
                          "offer scene labels as ground-truth choices in judge prompts");
    auto* tau_opt = reflect_cmd->add_option("--tau", flag_tau, "replacement threshold");
    auto* rounds_opt = reflect_cmd->add_option("--rounds", flag_rounds, "passes, 1..3");

    // select
    auto* select = app.add_subcommand("select", "top-k sentence selection and prompt assembly");
    std::string sel_info, sel_embeddings, sel_question, sel_out, sel_prompt_txt;
    int sel_rounds = -1, sel_k1 = 0, sel_k2 = 0, sel_hash_dim = 64;
    select->add_option("--info", sel_info, "scene information file")->required();
    select->add_option("--embeddings", sel_embeddings, "embedding file");
    select->add_option("--question", sel_question, "question text (hash embeddings)");
    select->add_option("--out", sel_out, "selection result file")->required();
    select->add_option("--prompt-txt", sel_prompt_txt, "also write the prompt prefix");
    select->add_option("--hash-dim", sel_hash_dim, "hashed embedding dimension");
    auto* sel_rounds_opt = select->add_option("--rounds", sel_rounds, "0, 1, or 2");
    auto* k1_opt = select->add_option("--k1", sel_k1, "round-1 keep count");
    auto* k2_opt = select->add_option("--k2", sel_k2, "round-2 keep count");

    // eval
    auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
    std::string eval_pred, eval_metric, eval_out, eval_txt;
    double eval_threshold = 0.5;
    eval->add_option("--pred", eval_pred, "predictions file (JSON lines)")->required();
    eval->add_option("--metric", eval_metric,
                     "acc, f1, em, em_r, bleu4, rouge_l, meteor, cider, text, plan")
        ->required();
    eval->add_option("--threshold", eval_threshold, "IoU threshold for acc/f1");
    eval->add_option("--out", eval_out, "report file (JSON)");
    eval->add_option("--txt", eval_txt, "plain-text report table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    sl::PipelineConfig cfg;
    if (!config_path.empty()) {
        cfg = sl::load_pipeline_config(config_path);
    }
    if (jobs > 0) {
        cfg.jobs = jobs;
        cfg.providers.max_in_flight = jobs;
    }

    if (synth->parsed()) {
        const sl::Vec3 room = parse_extent(synth_room);
        sl::Scene scene = sl::generate_synthetic_scene(seed, synth_objects, room);
        if (synth_views > 0) {
            scene.views = make_synth_views(room, synth_views);
        }
        sl::save_scene(synth_out, scene);
        return 0;
    }

    if (parse->parsed()) {
        sl::ReasonerConfig reasoner = cfg.reasoner;
        if (beta_opt->count() > 0) reasoner.beta = flag_beta;
        if (tol_opt->count() > 0) reasoner.theta_tol_deg = flag_theta_tol;
        if (sectors_opt->count() > 0) reasoner.n_sectors = flag_sectors;
        if (saliency_opt->count() > 0) reasoner.saliency_m = flag_saliency;
        if (incl_opt->count() > 0) reasoner.nearby_exclusive = !flag_nearby_inclusive;
        if (axis_opt->count() > 0) {
            if (flag_vertical_axis == "camera_up") {
                reasoner.vertical_axis = sl::VerticalAxis::CameraUp;
            } else if (flag_vertical_axis == "world_up") {
                reasoner.vertical_axis = sl::VerticalAxis::WorldUp;
            } else {
                throw sl::ValidationError("--vertical-axis must be camera_up or world_up");
            }
        }
        reasoner.validate();
        const sl::Scene scene = sl::load_scene(parse_scene);
        sl::PriorTable priors;
        if (!parse_priors.empty()) {
            priors = sl::load_priors(parse_priors);
        }
        sl::save_graph(parse_out, sl::build_scene_graph(scene, priors, reasoner));
        return 0;
    }

    if (describe->parsed()) {
        const sl::Scene scene = sl::load_scene(desc_scene);
        const auto graph = sl::load_graph(desc_graph);
        sl::ExpressionMode mode = cfg.mode;
        if (desc_mode_opt->count() > 0) {
            mode = sl::expression_mode_from_string(desc_mode);
        }
        std::map<int, sl::CandidateSet> candidates;
        std::string candidates_path = !desc_candidates.empty() ? desc_candidates
                                                               : cfg.providers.candidates_path;
        if (!candidates_path.empty()) {
            candidates = sl::load_candidates(candidates_path);
        }
        std::unique_ptr<sl::RefineProvider> refiner;
        if (!cfg.providers.caption_endpoint.empty()) {
            refiner = sl::make_http_refine_provider(
                sl::make_http_config(cfg, cfg.providers.caption_endpoint));
        }
        sl::CaptionPipelineConfig pipeline_cfg;
        pipeline_cfg.max_in_flight = cfg.providers.max_in_flight;
        const auto captions =
            sl::caption_objects(scene, candidates, refiner.get(), pipeline_cfg);
        const sl::SceneInformation info =
            sl::build_scene_information(scene, graph, captions, mode);
        sl::save_scene_information(desc_out, info);
        if (!desc_captions_out.empty()) {
            sl::save_captions(desc_captions_out, captions);
        }
        if (!desc_txt.empty()) {
            sl::atomic_write_file(desc_txt, sl::to_text(info));
        }
        if (!desc_crops.empty()) {
            std::vector<sl::CropManifestEntry> manifest;
            for (const sl::SceneObject& obj : scene.objects) {
                for (const sl::CropRegion& region :
                     sl::select_views(obj, scene.views, desc_max_views)) {
                    manifest.push_back({obj.id, region});
                }
            }
            sl::save_crop_manifest(desc_crops, manifest);
        }
        return 0;
    }

    if (reflect_cmd->parsed()) {
        const sl::Scene scene = sl::load_scene(refl_scene);
        sl::SceneInformation info = sl::load_scene_information(refl_info);
        sl::PriorTable priors;
        if (!refl_priors.empty()) {
            priors = sl::load_priors(refl_priors);
        }
        sl::ReflectionOptions options;
        options.tau = tau_opt->count() > 0 ? flag_tau : cfg.reflection.tau;
        options.max_in_flight = cfg.providers.max_in_flight;
        if (refl_gt) {
            std::map<int, std::string> labels;
            for (const sl::SceneObject& obj : scene.objects) {
                labels[obj.id] = obj.label;
            }
            options.gt_labels = std::move(labels);
        }
        int rounds = rounds_opt->count() > 0 ? flag_rounds : cfg.reflection.rounds;
        if (rounds < 1 || rounds > 3) {
            throw sl::ValidationError("--rounds must be in [1, 3]");
        }
        std::unique_ptr<sl::JudgeProvider> judge;
        std::unique_ptr<sl::CorrectorProvider> corrector;
        if (!cfg.providers.judge_endpoint.empty()) {
            judge = sl::make_http_judge_provider(
                sl::make_http_config(cfg, cfg.providers.judge_endpoint));
        } else {
            judge = sl::make_offline_judge(scene, priors, cfg.reasoner);
        }
        if (!cfg.providers.corrector_endpoint.empty()) {
            corrector = sl::make_http_corrector_provider(
                sl::make_http_config(cfg, cfg.providers.corrector_endpoint));
        } else {
            corrector = sl::make_offline_corrector(scene, priors, cfg.reasoner);
        }
        std::vector<sl::ReflectionReport> all_reports;
        for (int round = 0; round < rounds; ++round) {
            auto [refined, reports] = sl::reflect(info, *judge, *corrector, options);
            info = std::move(refined);
            bool any_replaced = false;
            for (const sl::ReflectionReport& report : reports) {
                any_replaced = any_replaced || report.replaced;
                all_reports.push_back(report);
            }
            if (!any_replaced) {
                break;
            }
        }
        sl::save_scene_information(refl_out, info);
        if (!refl_reports.empty()) {
            sl::save_reports(refl_reports, all_reports);
        }
        return 0;
    }

    if (select->parsed()) {
        const sl::SceneInformation info = sl::load_scene_information(sel_info);
        sl::EmbeddingFile embeds;
        if (!sel_embeddings.empty()) {
            embeds = sl::load_embeddings(sel_embeddings);
            if (!sel_question.empty()) {
                embeds.question_text = sel_question;
            }
        } else {
            if (sel_question.empty()) {
                throw sl::ValidationError("--question is required without --embeddings");
            }
            if (!cfg.providers.embedding_endpoint.empty()) {
                auto provider = sl::make_http_embed_provider(
                    sl::make_http_config(cfg, cfg.providers.embedding_endpoint));
                embeds = sl::service_embeddings_for(info, sel_question, *provider,
                                                    cfg.providers.max_in_flight);
            } else {
                embeds = sl::hash_embeddings_for(info, sel_question, sel_hash_dim);
            }
        }
        const int rounds = sel_rounds_opt->count() > 0 ? sel_rounds : cfg.selection.rounds;
        const int k1 = k1_opt->count() > 0 ? sel_k1 : cfg.selection.k1;
        const int k2 = k2_opt->count() > 0 ? sel_k2 : cfg.selection.k2;
        sl::SelectionResult result;
        if (rounds == 0) {
            result = sl::select_unfiltered(info, embeds);
        } else if (rounds == 1) {
            result = sl::select_top_k(info, embeds, k1);
        } else if (rounds == 2) {
            result = sl::select_two_round(info, embeds, k1, k2);
        } else {
            throw sl::ValidationError("--rounds must be 0, 1, or 2");
        }
        sl::save_selection(sel_out, result);
        if (!sel_prompt_txt.empty()) {
            sl::atomic_write_file(sel_prompt_txt, result.prompt_prefix);
        }
        return 0;
    }

    if (eval->parsed()) {
        std::string metric = eval_metric;
        const auto at = metric.find('@');
        if (at != std::string::npos) {
            eval_threshold = std::stod(metric.substr(at + 1));
            metric = metric.substr(0, at);
        }
        const auto samples = load_predictions(eval_pred);
        const auto report = run_eval(metric, eval_threshold, samples);
        json doc = json::object();
        for (const auto& [name, value] : report) {
            doc[name] = value;
        }
        if (!eval_out.empty()) {
            sl::write_json_file(eval_out, doc);
        }
        if (!eval_txt.empty()) {
            sl::atomic_write_file(eval_txt, sl::format_report(report));
        }
        std::cout << doc.dump(2) << "\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const sl::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const sl::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const sl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
