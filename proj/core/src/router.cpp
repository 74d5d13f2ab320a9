#include "finequest/router.hpp"

#include "finequest/answer_letter.hpp"
#include "finequest/util.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace finequest::router {

namespace detail {
extern const char *const kReactivePromptAsset;
}

using nlohmann::json;

std::string_view to_string(Relevance v) noexcept { return v == Relevance::Direct ? "direct" : "indirect"; }
std::string_view to_string(QuestionType v) noexcept { return v == QuestionType::Static ? "static" : "dynamic"; }
std::string_view to_string(Reasoning v) noexcept { return v == Reasoning::SingleStep ? "single_step" : "multi_step"; }
std::string_view to_string(Decision v) noexcept { return v == Decision::Answer ? "answer" : "switch"; }
std::string_view to_string(Mode v) noexcept { return v == Mode::Reactive ? "reactive" : "deliberative"; }

std::string_view to_string(ForceMode v) noexcept {
    switch (v) {
        case ForceMode::Auto: return "auto";
        case ForceMode::Reactive: return "reactive";
        case ForceMode::Deliberative: return "deliberative";
    }
    return "auto";
}

ForceMode parse_force_mode(std::string_view text) {
    if (text == "auto") return ForceMode::Auto;
    if (text == "reactive") return ForceMode::Reactive;
    if (text == "deliberative") return ForceMode::Deliberative;
    throw Error(Errc::InvalidArgument, "force mode must be auto, reactive or deliberative, got '" + std::string(text) + "'");
}

const std::string &default_reactive_prompt() {
    static const std::string prompt = detail::kReactivePromptAsset;
    return prompt;
}

namespace {

void replace_all(std::string &text, const std::string &key, const std::string &value) {
    for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
    }
}

std::string trim(std::string_view text) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b])) != 0) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1])) != 0) --e;
    return std::string(text.substr(b, e - b));
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::ranges::transform(out, out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename E>
E enum_field(const json &obj, const char *key, E fallback, std::initializer_list<std::pair<const char *, E>> names) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    const std::string v = lower(obj.at(key).get<std::string>());
    for (const auto &[name, value] : names) {
        if (v == name) return value;
    }
    throw Error(Errc::ParseError, std::string("unexpected value for ") + key);
}

std::optional<DifficultyAssessment> parse_json_assessment(const std::string &reply) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    try {
        const json obj = json::parse(reply.substr(open, close - open + 1));
        if (!obj.is_object() || !obj.contains("decision")) return std::nullopt;
        DifficultyAssessment a;
        a.decision = enum_field(obj, "decision", Decision::Answer, {{"answer", Decision::Answer}, {"switch", Decision::Switch}});
        a.relevance = enum_field(obj, "relevance", Relevance::Direct, {{"direct", Relevance::Direct}, {"indirect", Relevance::Indirect}});
        a.question_type = enum_field(obj, "question_type", QuestionType::Static,
                                     {{"static", QuestionType::Static}, {"dynamic", QuestionType::Dynamic}});
        a.reasoning = enum_field(obj, "reasoning", Reasoning::SingleStep,
                                 {{"single_step", Reasoning::SingleStep}, {"multi_step", Reasoning::MultiStep}});
        if (obj.contains("external_knowledge") && !obj.at("external_knowledge").is_null()) {
            a.external_knowledge = obj.at("external_knowledge").get<bool>();
        }
        a.rationale = obj.value("rationale", "");
        if (obj.contains("answer") && obj.at("answer").is_string()) a.answer = obj.at("answer").get<std::string>();
        return a;
    } catch (const json::exception &) {
        return std::nullopt;
    } catch (const Error &) {
        return std::nullopt;
    }
}

}  // namespace

std::string render_reactive_prompt(const std::string &prompt_template, const std::string &video_ref,
                                   const std::string &question, const std::vector<std::string> &options) {
    std::string block;
    if (!options.empty()) {
        block = "Options:\n";
        for (std::size_t i = 0; i < options.size(); ++i) {
            block += std::string(1, static_cast<char>('A' + i)) + ". " + options[i] + "\n";
        }
        block += "If you answer directly, give the option letter.";
    }
    std::string out = prompt_template;
    replace_all(out, "{{video_ref}}", video_ref);
    replace_all(out, "{{question}}", question);
    replace_all(out, "{{options}}", block);
    return out;
}

DifficultyAssessment parse_assessment(const std::string &reply) {
    const std::string text = trim(reply);
    if (text.empty()) throw Error(Errc::UnparseableResponse, "agent reply is empty");

    DifficultyAssessment a;
    if (auto parsed = parse_json_assessment(text)) {
        a = std::move(*parsed);
    } else {
        a.fallback = true;
        a.decision = lower(text).find("switch") != std::string::npos ? Decision::Switch : Decision::Answer;
        a.rationale = "keyword fallback on non-JSON reply: " + text;
        if (a.decision == Decision::Answer) a.answer = text;
    }
    if ((a.reasoning == Reasoning::MultiStep || a.external_knowledge) && a.decision == Decision::Answer) {
        a.decision = Decision::Switch;
        a.overridden = true;
    }
    return a;
}

DifficultyAssessment classify_query(const std::string &video_ref, const std::string &question,
                                    const backends::Agent &agent, const ClipTensor *clip,
                                    const std::vector<std::string> &options, const std::string &prompt_template) {
    const backends::AgentRequest request{video_ref, clip, render_reactive_prompt(prompt_template, video_ref, question, options),
                                         question};
    return parse_assessment(agent.respond(request));
}

json to_json(const DifficultyAssessment &a) {
    return {{"relevance", to_string(a.relevance)},
            {"question_type", to_string(a.question_type)},
            {"reasoning", to_string(a.reasoning)},
            {"external_knowledge", a.external_knowledge},
            {"decision", to_string(a.decision)},
            {"rationale", a.rationale},
            {"answer", a.answer},
            {"fallback", a.fallback},
            {"overridden", a.overridden}};
}

json to_json(const RoutedAnswer &r) {
    json trace = json::array();
    for (const auto &rec : r.trace) trace.push_back({{"stage", rec.stage}, {"detail", rec.detail}});
    return {{"text", r.text},
            {"letter", r.letter ? json(std::string(1, *r.letter)) : json(nullptr)},
            {"mode", to_string(r.mode)},
            {"assessment", to_json(r.assessment)},
            {"trace", trace}};
}

namespace {

std::string strip_code(const Error &e) {
    const std::string what = e.what();
    const std::string prefix = std::string(finequest::to_string(e.code())) + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

}  // namespace

StageError::StageError(std::string stage, const Error &cause, Trace partial_trace)
    : Error(cause.code(), "stage '" + stage + "': " + strip_code(cause)),
      stage_(std::move(stage)),
      trace_(std::move(partial_trace)) {}

void PipelineConfig::validate() const {
    segmenter.validate();
    weights.validate();
    match.weights.validate();
    if (match.top_k == 0) throw Error(Errc::InvalidArgument, "match top_k must be positive");
    if (workers == 0) throw Error(Errc::InvalidArgument, "workers must be positive");
    distortions::default_distortion_set(seed, noise_sigma, warp_strength).spatial.validate();
}

PipelineConfig pipeline_config_from_json(const json &doc) {
    if (!doc.is_object()) throw Error(Errc::ParseError, "pipeline config must be a JSON object");
    PipelineConfig c;
    try {
        if (auto s = doc.find("segmenter"); s != doc.end()) {
            c.segmenter.win_size = s->value("win_size", c.segmenter.win_size);
            c.segmenter.z_min = s->value("z_min", c.segmenter.z_min);
            c.segmenter.z_max = s->value("z_max", c.segmenter.z_max);
            c.segmenter.clip_len_min = s->value("clip_len_min", c.segmenter.clip_len_min);
            c.segmenter.clip_len_max = s->value("clip_len_max", c.segmenter.clip_len_max);
        }
        if (doc.contains("estimator")) c.estimator = segmenter::parse_estimator(doc.at("estimator").get<std::string>());
        c.use_mask = doc.value("use_mask", c.use_mask);
        if (auto d = doc.find("distortions"); d != doc.end()) {
            c.noise_sigma = d->value("noise_sigma", c.noise_sigma);
            c.warp_strength = d->value("warp_strength", c.warp_strength);
            if (d->contains("spatial_variant")) {
                c.spatial_variant = distortions::parse_spatial_variant(d->at("spatial_variant").get<std::string>());
            }
            if (d->contains("temporal_variant")) {
                c.temporal_variant = distortions::parse_temporal_variant(d->at("temporal_variant").get<std::string>());
            }
        }
        if (auto w = doc.find("weights"); w != doc.end()) {
            c.weights.alpha_s = w->value("alpha_s", c.weights.alpha_s);
            c.weights.alpha_t = w->value("alpha_t", c.weights.alpha_t);
            c.weights.alpha_st = w->value("alpha_st", c.weights.alpha_st);
        }
        c.n1 = doc.value("n1", c.n1);
        c.n2 = doc.value("n2", c.n2);
        if (auto m = doc.find("match"); m != doc.end()) {
            c.match.top_k = m->value("top_k", c.match.top_k);
            if (m->contains("sport") && !m->at("sport").is_null()) {
                c.match.sport = ssgraph::parse_sport_code(m->at("sport").get<std::string>());
            }
            if (auto w = m->find("weights"); w != m->end()) {
                auto &cw = c.match.weights;
                cw.t2t = w->value("t2t", cw.t2t);
                cw.v2v = w->value("v2v", cw.v2v);
                cw.t2v = w->value("t2v", cw.t2v);
                cw.v2t = w->value("v2t", cw.v2t);
                cw.v2r = w->value("v2r", cw.v2r);
            }
        }
        c.reasoning_prompt = doc.value("reasoning_prompt", c.reasoning_prompt);
        c.seed = doc.value("seed", c.seed);
        c.workers = doc.value("workers", c.workers);
        if (doc.contains("force_mode")) c.force_mode = parse_force_mode(doc.at("force_mode").get<std::string>());
        c.reactive_prompt_path = doc.value("reactive_prompt_path", c.reactive_prompt_path);
    } catch (const json::exception &e) {
        throw Error(Errc::ParseError, std::string("pipeline config: ") + e.what());
    } catch (const Error &e) {
        if (e.code() == Errc::ParseError) throw;
        throw Error(Errc::ParseError, std::string("pipeline config: ") + e.what());
    }
    return c;
}

json to_json(const PipelineConfig &c) {
    const auto &w = c.match.weights;
    return {{"segmenter",
             {{"win_size", c.segmenter.win_size},
              {"z_min", c.segmenter.z_min},
              {"z_max", c.segmenter.z_max},
              {"clip_len_min", c.segmenter.clip_len_min},
              {"clip_len_max", c.segmenter.clip_len_max}}},
            {"estimator", segmenter::to_string(c.estimator)},
            {"use_mask", c.use_mask},
            {"distortions",
             {{"noise_sigma", c.noise_sigma},
              {"warp_strength", c.warp_strength},
              {"spatial_variant", distortions::to_string(c.spatial_variant)},
              {"temporal_variant", distortions::to_string(c.temporal_variant)}}},
            {"weights", {{"alpha_s", c.weights.alpha_s}, {"alpha_t", c.weights.alpha_t}, {"alpha_st", c.weights.alpha_st}}},
            {"n1", c.n1},
            {"n2", c.n2},
            {"match",
             {{"top_k", c.match.top_k},
              {"sport", c.match.sport ? json(std::string(ssgraph::to_string(*c.match.sport))) : json(nullptr)},
              {"weights", {{"t2t", w.t2t}, {"v2v", w.v2v}, {"t2v", w.t2v}, {"v2t", w.v2t}, {"v2r", w.v2r}}}}},
            {"reasoning_prompt", c.reasoning_prompt},
            {"seed", c.seed},
            {"workers", c.workers},
            {"force_mode", to_string(c.force_mode)},
            {"reactive_prompt_path", c.reactive_prompt_path}};
}

Engine::Engine(PipelineConfig config, backends::BackendSet backends, std::shared_ptr<const ssgraph::SportsGraph> graph)
    : config_(std::move(config)), backends_(std::move(backends)), graph_(std::move(graph)) {
    config_.validate();
    if (graph_) backends::check_wiring(backends_, *graph_);
    reactive_prompt_ = config_.reactive_prompt_path.empty() ? default_reactive_prompt()
                                                            : util::read_file(config_.reactive_prompt_path);
}

RoutedAnswer Engine::answer(const std::string &video_ref, const std::string &question,
                            const std::vector<std::string> &options) const {
    ClipTensor video;
    try {
        video = load_video(video_ref);
    } catch (const Error &e) {
        throw StageError("load", e, {});
    }
    return answer(video, video_ref, question, options);
}

RoutedAnswer Engine::answer(const ClipTensor &video, const std::string &video_ref, const std::string &question,
                            const std::vector<std::string> &options) const {
    RoutedAnswer out;
    if (config_.force_mode == ForceMode::Deliberative) {
        out.assessment.decision = Decision::Switch;
        out.assessment.overridden = true;
        out.assessment.rationale = "deliberative mode forced by configuration";
    } else {
        try {
            out.assessment = classify_query(video_ref, question, backends_.require_agent(), &video, options, reactive_prompt_);
        } catch (const Error &e) {
            throw StageError("classify", e, {});
        }
        out.trace.push_back({"classify",
                             {{"prompt", config_.reactive_prompt_path.empty() ? kReactivePromptVersion
                                                                              : config_.reactive_prompt_path},
                              {"frames_sent", video.frame_count()},
                              {"fallback", out.assessment.fallback},
                              {"overridden", out.assessment.overridden}}});
        if (config_.force_mode == ForceMode::Reactive && out.assessment.decision == Decision::Switch) {
            out.assessment.decision = Decision::Answer;
            out.assessment.overridden = true;
            if (out.assessment.answer.empty()) out.assessment.answer = out.assessment.rationale;
        }
    }

    if (out.assessment.decision == Decision::Answer) {
        out.mode = Mode::Reactive;
        out.text = out.assessment.answer.empty() ? out.assessment.rationale : out.assessment.answer;
    } else {
        out.mode = Mode::Deliberative;
        out.text = deliberate(video, question, options, out.trace);
    }
    if (!options.empty()) out.letter = eval::extract_letter(out.text, options);
    return out;
}

std::string Engine::deliberate(const ClipTensor &video, const std::string &question,
                               const std::vector<std::string> &options, Trace &trace) const {
    auto stage = [&](const char *name, auto &&fn) {
        try {
            return fn();
        } catch (const StageError &) {
            throw;
        } catch (const Error &e) {
            throw StageError(name, e, trace);
        }
    };

    const std::size_t bucket = selector::bucketed_n(video.duration_seconds());
    const std::size_t n1 = config_.n1 > 0 ? config_.n1 : bucket;
    const std::size_t n2 = config_.n2 > 0 ? config_.n2 : bucket;

    // segment
    const bool masked = config_.use_mask && backends_.masker != nullptr;
    const ClipTensor prepared = stage("segment", [&] { return masked ? backends::mask(*backends_.masker, video) : video; });
    const auto proposals = stage("segment", [&] {
        return segmenter::segment_video(prepared, config_.segmenter, config_.estimator, backends_.flow.get());
    });
    trace.push_back({"segment",
                     {{"frames", prepared.frame_count()},
                      {"masked", masked},
                      {"estimator", segmenter::to_string(config_.estimator)},
                      {"proposals", segmenter::to_json(proposals)}}});

    // select
    auto selection = stage("select", [&] {
        std::vector<ClipTensor> clips;
        clips.reserve(proposals.size());
        for (const auto &p : proposals) clips.push_back(prepared.slice(p));
        auto specs = distortions::default_distortion_set(config_.seed, config_.noise_sigma, config_.warp_strength);
        for (auto *spec : {&specs.spatial, &specs.temporal, &specs.spatiotemporal}) {
            spec->spatial_variant = config_.spatial_variant;
            spec->temporal_variant = config_.temporal_variant;
        }
        return selector::select_key_clips(clips, question, config_.weights, specs, backends_.require_scorer(), n1,
                                          config_.workers);
    });
    std::vector<FrameInterval> key_intervals;
    json scores = json::array();
    for (const auto &s : selection.scores) scores.push_back({{"clip", s.clip_index}, {"score", s.score}});
    json intervals = json::array();
    for (const auto &run : selection.runs) {
        key_intervals.push_back({proposals[run.first_clip].start, proposals[run.end_clip - 1].end});
        intervals.push_back({key_intervals.back().start, key_intervals.back().end});
    }
    trace.push_back({"select", {{"n1", n1}, {"scores", scores}, {"selected", selection.selected}, {"key_clips", intervals}}});

    // caption
    std::vector<ClipTensor> key_clips;
    for (const auto &iv : key_intervals) key_clips.push_back(prepared.slice(iv));
    const auto captions = stage("caption", [&] {
        std::vector<std::string> out;
        const auto &captioner = backends_.require_captioner();
        for (const auto &clip : key_clips) out.push_back(backends::caption(captioner, clip));
        return out;
    });
    json caption_detail = json::array();
    for (std::size_t i = 0; i < captions.size(); ++i) {
        caption_detail.push_back({{"start", key_intervals[i].start}, {"end", key_intervals[i].end}, {"caption", captions[i]}});
    }
    trace.push_back({"caption", {{"captions", caption_detail}}});

    // embed
    const auto embedded = stage("embed", [&] {
        std::vector<matcher::EmbeddedClip> out;
        const auto &embedder = backends_.require_embedder();
        for (std::size_t i = 0; i < key_clips.size(); ++i) {
            out.push_back({key_intervals[i], backends::embed_clip(embedder, key_clips[i]), captions[i],
                           backends::embed_text(embedder, captions[i])});
        }
        return out;
    });
    trace.push_back({"embed", {{"clips", embedded.size()}, {"dim", embedded.empty() ? 0 : embedded.front().embedding.size()}}});

    // match
    const auto matches = stage("match", [&] {
        if (!graph_) throw Error(Errc::EmptyGraph, "no knowledge graph loaded");
        std::map<std::string, matcher::MatchResult> best;
        for (const auto &item : embedded) {
            for (auto &m : matcher::match(item, *graph_, n2, config_.match)) {
                auto [it, inserted] = best.try_emplace(m.node_id, m);
                if (!inserted && m.combined > it->second.combined) it->second = m;
            }
        }
        std::vector<matcher::MatchResult> out;
        for (auto &[id, m] : best) out.push_back(std::move(m));
        std::ranges::stable_sort(out, [](const auto &a, const auto &b) { return a.combined > b.combined; });
        if (out.size() > n2) out.resize(n2);
        return out;
    });
    trace.push_back({"match", {{"n2", n2}, {"matches", matcher::to_json(matches)}}});

    // reason
    const std::string answer = stage("reason", [&] {
        std::string prompt = matcher::enrich_prompt(config_.reasoning_prompt, matches);
        prompt += "\nClip captions:\n";
        for (std::size_t i = 0; i < captions.size(); ++i) {
            prompt += "[" + std::to_string(key_intervals[i].start) + ", " + std::to_string(key_intervals[i].end) + ") " +
                      captions[i] + "\n";
        }
        return backends::reason(backends_.require_reasoner(), {prompt, question, options});
    });
    trace.push_back({"reason", {{"answer", answer}}});
    return answer;
}

}  // namespace finequest::router
