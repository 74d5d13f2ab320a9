#include "finequest/mock_backends.hpp"

#include "finequest/util.hpp"

#include <cmath>
#include <random>

namespace finequest::backends::mock {

using nlohmann::json;

namespace {

std::mt19937_64 seeded_engine(std::string_view bytes, std::uint64_t seed) {
    const auto digest = util::sha256(bytes);
    std::vector<std::uint32_t> words;
    for (std::size_t i = 0; i < digest.size(); i += 4) {
        words.push_back(static_cast<std::uint32_t>(digest[i]) << 24 | static_cast<std::uint32_t>(digest[i + 1]) << 16 |
                        static_cast<std::uint32_t>(digest[i + 2]) << 8 | static_cast<std::uint32_t>(digest[i + 3]));
    }
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

const json &object_field(const json &parent, const char *key) {
    static const json empty = json::object();
    auto it = parent.find(key);
    if (it == parent.end()) return empty;
    if (!it->is_object()) throw Error(Errc::ParseError, std::string("fixture field '") + key + "' must be an object");
    return *it;
}

std::vector<double> number_array(const json &j, const char *what) {
    if (!j.is_array()) throw Error(Errc::ParseError, std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto &x : j) {
        if (!x.is_number()) throw Error(Errc::ParseError, std::string(what) + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace

void MockBase::fail_with(Errc code, std::string message) {
    std::lock_guard lock(mutex_);
    failure_ = {code, std::move(message)};
}

void MockBase::clear_failure() {
    std::lock_guard lock(mutex_);
    failure_.reset();
}

void MockBase::enter() const {
    ++calls_;
    std::lock_guard lock(mutex_);
    if (failure_) throw Error(failure_->first, failure_->second);
}

// --- agent ---

MockAgent::MockAgent() : default_response_(assessment_json(true, "", "mock agent default: delegate")) {}

void MockAgent::script(const std::string &question, std::string response) {
    std::lock_guard lock(mutex_);
    by_question_[question] = std::move(response);
}

void MockAgent::set_default(std::string response) {
    std::lock_guard lock(mutex_);
    default_response_ = std::move(response);
}

void MockAgent::set_handler(Handler handler) {
    std::lock_guard lock(mutex_);
    handler_ = std::move(handler);
}

std::string MockAgent::respond(const AgentRequest &request) const {
    enter();
    Handler handler;
    {
        std::lock_guard lock(mutex_);
        if (auto it = by_question_.find(request.question); it != by_question_.end()) return it->second;
        if (!handler_) return default_response_;
        handler = handler_;
    }
    return handler(request);
}

std::string MockAgent::assessment_json(bool switch_needed, const std::string &answer, const std::string &rationale) {
    json j = {{"relevance", switch_needed ? "indirect" : "direct"},
              {"question_type", switch_needed ? "dynamic" : "static"},
              {"reasoning", switch_needed ? "multi_step" : "single_step"},
              {"external_knowledge", switch_needed},
              {"decision", switch_needed ? "switch" : "answer"},
              {"rationale", rationale}};
    if (!answer.empty()) j["answer"] = answer;
    return j.dump();
}

// --- captioner ---

void MockCaptioner::script(const std::string &clip_hash, std::string caption) {
    std::lock_guard lock(mutex_);
    by_clip_[clip_hash] = std::move(caption);
}

std::string MockCaptioner::caption(const ClipTensor &clip) const {
    enter();
    const std::string hash = clip.content_hash();
    {
        std::lock_guard lock(mutex_);
        if (auto it = by_clip_.find(hash); it != by_clip_.end()) return it->second;
    }
    return "An athlete performs a movement over " + std::to_string(clip.frame_count()) + " frames (clip " +
           hash.substr(0, 8) + ").";
}

// --- scorer ---

MockScorer::MockScorer(ScorerVocabulary vocabulary, std::uint64_t seed)
    : vocabulary_(std::move(vocabulary)), seed_(seed) {}

ScorerVocabulary MockScorer::default_vocabulary() { return {"mock-yes-no-v1", 8, 0}; }

void MockScorer::script(const std::string &clip_hash, const std::string &prompt_hash, std::vector<double> logits) {
    std::lock_guard lock(mutex_);
    table_[{clip_hash, prompt_hash}] = std::move(logits);
}

void MockScorer::set_handler(Handler handler) {
    std::lock_guard lock(mutex_);
    handler_ = std::move(handler);
}

LogitVector MockScorer::score_logits(const ClipTensor &clip, const std::string &prompt) const {
    enter();
    const std::string clip_hash = clip.content_hash();
    const std::string prompt_hash = util::sha256_hex(prompt);
    Handler handler;
    {
        std::lock_guard lock(mutex_);
        if (auto it = table_.find({clip_hash, prompt_hash}); it != table_.end()) return {vocabulary_.vocab_id, it->second};
        handler = handler_;
    }
    if (handler) return handler(clip, prompt);
    auto rng = seeded_engine(clip_hash + "|" + prompt_hash, seed_);
    std::normal_distribution<double> gauss(0.0, 1.0);
    LogitVector out{vocabulary_.vocab_id, std::vector<double>(vocabulary_.size)};
    for (auto &v : out.values) v = gauss(rng);
    return out;
}

// --- embedder ---

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw Error(Errc::InvalidArgument, "embedding dimension must be positive");
}

void MockEmbedder::script_text(const std::string &text, Embedding embedding) {
    std::lock_guard lock(mutex_);
    text_[text] = std::move(embedding);
}

void MockEmbedder::script_clip(const std::string &clip_hash, Embedding embedding) {
    std::lock_guard lock(mutex_);
    clip_[clip_hash] = std::move(embedding);
}

Embedding MockEmbedder::hash_to_unit_vector(std::string_view bytes, std::size_t dim, std::uint64_t seed) {
    auto rng = seeded_engine(bytes, seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Embedding v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto &x : v) {
            x = gauss(rng);
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto &x : v) x /= norm;
    return v;
}

Embedding MockEmbedder::embed_text(std::string_view text) const {
    enter();
    {
        std::lock_guard lock(mutex_);
        if (auto it = text_.find(std::string(text)); it != text_.end()) return it->second;
    }
    return hash_to_unit_vector(text, dim_, seed_);
}

Embedding MockEmbedder::embed_clip(const ClipTensor &clip) const {
    enter();
    const std::string hash = clip.content_hash();
    {
        std::lock_guard lock(mutex_);
        if (auto it = clip_.find(hash); it != clip_.end()) return it->second;
    }
    const auto bytes = encode_clip(clip);
    return hash_to_unit_vector(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()), dim_, seed_);
}

// --- reasoner ---

void MockReasoner::script_question(const std::string &question, std::string answer) {
    std::lock_guard lock(mutex_);
    by_question_[question] = std::move(answer);
}

void MockReasoner::script_prompt(const std::string &prompt_hash, std::string answer) {
    std::lock_guard lock(mutex_);
    by_prompt_[prompt_hash] = std::move(answer);
}

void MockReasoner::set_default(std::string answer) {
    std::lock_guard lock(mutex_);
    default_answer_ = std::move(answer);
}

void MockReasoner::set_handler(Handler handler) {
    std::lock_guard lock(mutex_);
    handler_ = std::move(handler);
}

std::string MockReasoner::reason(const ReasonRequest &request) const {
    enter();
    const std::string prompt_hash = util::sha256_hex(request.prompt);
    Handler handler;
    {
        std::lock_guard lock(mutex_);
        if (auto it = by_prompt_.find(prompt_hash); it != by_prompt_.end()) return it->second;
        if (auto it = by_question_.find(request.question); it != by_question_.end()) return it->second;
        if (!handler_) return default_answer_;
        handler = handler_;
    }
    return handler(request);
}

// --- masker / flow ---

ClipTensor MockMasker::mask(const ClipTensor &clip) const {
    enter();
    return clip;
}

std::vector<double> MockFlow::flow_magnitudes(const ClipTensor &clip) const {
    enter();
    std::vector<double> out;
    for (std::size_t t = 0; t + 1 < clip.frame_count(); ++t) {
        const auto a = clip.frame(t);
        const auto b = clip.frame(t + 1);
        double total = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) total += std::fabs(static_cast<double>(b[k]) - a[k]);
        out.push_back(total / static_cast<double>(a.size()));
    }
    return out;
}

// --- wiring ---

MockBackends::MockBackends(std::size_t embedding_dim, std::uint64_t seed)
    : scorer(std::make_shared<MockScorer>(MockScorer::default_vocabulary(), seed)),
      embedder(std::make_shared<MockEmbedder>(embedding_dim, seed)) {}

BackendSet MockBackends::set() const {
    BackendSet s;
    s.agent = agent;
    s.captioner = captioner;
    s.scorer = scorer;
    s.embedder = embedder;
    s.reasoner = reasoner;
    s.masker = masker;
    s.flow = flow;
    return s;
}

std::size_t MockBackends::deliberative_calls() const {
    return captioner->calls() + scorer->calls() + embedder->calls() + reasoner->calls();
}

void MockBackends::reset_calls() {
    agent->reset_calls();
    captioner->reset_calls();
    scorer->reset_calls();
    embedder->reset_calls();
    reasoner->reset_calls();
    masker->reset_calls();
    flow->reset_calls();
}

void MockBackends::load_fixtures(const json &doc) {
    if (!doc.is_object()) throw Error(Errc::ParseError, "mock fixture document must be an object");
    if (auto a = doc.find("agent"); a != doc.end()) {
        if (a->contains("default")) agent->set_default(a->at("default").get<std::string>());
        for (const auto &[q, r] : object_field(*a, "by_question").items()) {
            agent->script(q, r.is_string() ? r.get<std::string>() : r.dump());
        }
    }
    if (auto c = doc.find("captioner"); c != doc.end()) {
        for (const auto &[h, text] : object_field(*c, "by_clip").items()) captioner->script(h, text.get<std::string>());
    }
    if (auto s = doc.find("scorer"); s != doc.end()) {
        if (s->contains("vocab_id") || s->contains("vocab_size") || s->contains("affirmative_token_index")) {
            ScorerVocabulary vocab = MockScorer::default_vocabulary();
            vocab.vocab_id = s->value("vocab_id", vocab.vocab_id);
            vocab.size = s->value("vocab_size", vocab.size);
            if (s->contains("affirmative_token_index")) {
                const auto &idx = s->at("affirmative_token_index");
                vocab.affirmative_token_index = idx.is_null() ? std::nullopt : std::optional<std::size_t>(idx.get<std::size_t>());
            }
            scorer = std::make_shared<MockScorer>(vocab, s->value("seed", std::uint64_t{0}));
        }
        for (const auto &e : s->value("entries", json::array())) {
            scorer->script(e.at("clip").get<std::string>(), e.at("prompt").get<std::string>(),
                           number_array(e.at("logits"), "scorer logits"));
        }
    }
    if (auto e = doc.find("embedder"); e != doc.end()) {
        for (const auto &[text, v] : object_field(*e, "text").items()) embedder->script_text(text, number_array(v, "embedding"));
        for (const auto &[h, v] : object_field(*e, "clip").items()) embedder->script_clip(h, number_array(v, "embedding"));
    }
    if (auto r = doc.find("reasoner"); r != doc.end()) {
        if (r->contains("default")) reasoner->set_default(r->at("default").get<std::string>());
        for (const auto &[q, a] : object_field(*r, "by_question").items()) reasoner->script_question(q, a.get<std::string>());
        for (const auto &[h, a] : object_field(*r, "by_prompt").items()) reasoner->script_prompt(h, a.get<std::string>());
    }
}

}  // namespace finequest::backends::mock
