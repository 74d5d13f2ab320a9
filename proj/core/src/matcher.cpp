#include "finequest/matcher.hpp"

#include "finequest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace finequest::matcher {

namespace {

struct Candidate {
    const ssgraph::ElementNode *node;
    double score;
};

bool better(const Candidate &a, const Candidate &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node->node_id < b.node->node_id;
}

std::vector<const ssgraph::ElementNode *> scan_set(const ssgraph::SportsGraph &graph, const MatchOptions &options) {
    return options.sport ? ssgraph::elements_of_sport(graph, *options.sport) : graph.elements();
}

void check_item(const EmbeddedClip &item, std::size_t dim) {
    if (item.embedding.size() != dim || item.caption_embedding.size() != dim) {
        throw Error(Errc::DimensionError, "query embeddings have length " + std::to_string(item.embedding.size()) + "/" +
                                              std::to_string(item.caption_embedding.size()) + ", graph uses " +
                                              std::to_string(dim));
    }
}

}  // namespace

void ChannelWeights::validate() const {
    for (double w : {t2t, v2v, t2v, v2t, v2r}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::InvalidArgument, "channel weights must be finite and >= 0");
    }
    if (t2t + v2v + t2v + v2t <= 0.0) throw Error(Errc::InvalidArgument, "at least one cosine channel weight must be positive");
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::LengthMismatch, "cosine of vectors of length " + std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroVector, "cosine of an all-zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<MatchResult> instance_match(const EmbeddedClip &item, const ssgraph::SportsGraph &graph,
                                        const MatchOptions &options) {
    const auto elements = scan_set(graph, options);
    if (elements.empty()) throw Error(Errc::EmptyGraph, "no elements to match against");
    check_item(item, graph.embedding_dim);
    if (options.top_k == 0) throw Error(Errc::InvalidArgument, "top_k must be at least 1");

    std::vector<Candidate> by_text;
    std::vector<Candidate> by_visual;
    by_text.reserve(elements.size());
    by_visual.reserve(elements.size());
    for (const auto *e : elements) {
        by_text.push_back({e, cosine(item.caption_embedding, e->description_embedding)});
        by_visual.push_back({e, cosine(item.embedding, e->instance_embedding)});
    }
    const std::size_t k = std::min(options.top_k, elements.size());
    std::ranges::partial_sort(by_text, by_text.begin() + static_cast<std::ptrdiff_t>(k), better);
    std::ranges::partial_sort(by_visual, by_visual.begin() + static_cast<std::ptrdiff_t>(k), better);

    std::set<const ssgraph::ElementNode *> chosen;
    for (std::size_t i = 0; i < k; ++i) {
        chosen.insert(by_text[i].node);
        chosen.insert(by_visual[i].node);
    }

    std::vector<MatchResult> out;
    for (const auto *e : elements) {
        if (!chosen.contains(e)) continue;
        MatchResult r;
        r.node_id = e->node_id;
        r.terminology = e->terminology;
        r.description_text = e->description_text;
        r.score_breakdown.t2t = cosine(item.caption_embedding, e->description_embedding);
        r.score_breakdown.v2v = cosine(item.embedding, e->instance_embedding);
        r.score_breakdown.t2v = cosine(item.caption_embedding, e->instance_embedding);
        r.score_breakdown.v2t = cosine(item.embedding, e->description_embedding);
        out.push_back(std::move(r));
    }
    return out;
}

double relational_score(const EmbeddedClip &clip, const ssgraph::ElementNode &node) {
    if (node.relation_sentences.empty()) {
        throw Error(Errc::NoRelationSentences, "element '" + node.node_id + "' has no relation sentences");
    }
    double total = 0.0;
    for (const auto &rs : node.relation_sentences) {
        total += cosine(clip.embedding, rs.positive_embedding) - cosine(clip.embedding, rs.negative_embedding);
    }
    return total / static_cast<double>(node.relation_sentences.size());
}

double combine(const ScoreBreakdown &s, const ChannelWeights &w) {
    const double cos_weight = w.t2t + w.v2v + w.t2v + w.v2t;
    const double instance = (w.t2t * s.t2t + w.v2v * s.v2v + w.t2v * s.t2v + w.v2t * s.v2t) / cos_weight;
    return instance + w.v2r * s.v2r;
}

std::vector<MatchResult> match(const EmbeddedClip &item, const ssgraph::SportsGraph &graph, std::size_t n2,
                               const MatchOptions &options) {
    if (n2 == 0) throw Error(Errc::InvalidArgument, "n2 must be at least 1");
    options.weights.validate();
    auto candidates = instance_match(item, graph, options);
    for (auto &c : candidates) {
        const auto *node = graph.find_element(c.node_id);
        c.score_breakdown.v2r = node->relation_sentences.empty() ? 0.0 : relational_score(item, *node);
        c.combined = combine(c.score_breakdown, options.weights);
    }
    std::ranges::sort(candidates, [](const MatchResult &a, const MatchResult &b) {
        if (a.combined != b.combined) return a.combined > b.combined;
        return a.node_id < b.node_id;
    });
    if (candidates.size() > n2) candidates.resize(n2);
    return candidates;
}

std::string enrich_prompt(const std::string &base, std::span<const MatchResult> matches) {
    if (matches.empty()) throw Error(Errc::EmptyMatches, "no matches to add to the reasoning prompt");
    std::string out = base;
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += "Domain knowledge:\n";
    for (const auto &m : matches) out += m.terminology + ": " + m.description_text + "\n";
    return out;
}

nlohmann::json to_json(const MatchResult &r) {
    return {{"node_id", r.node_id},
            {"terminology", r.terminology},
            {"description_text", r.description_text},
            {"score_breakdown",
             {{"t2t", r.score_breakdown.t2t},
              {"v2v", r.score_breakdown.v2v},
              {"t2v", r.score_breakdown.t2v},
              {"v2t", r.score_breakdown.v2t},
              {"v2r", r.score_breakdown.v2r}}},
            {"combined", r.combined}};
}

nlohmann::json to_json(std::span<const MatchResult> results) {
    auto out = nlohmann::json::array();
    for (const auto &r : results) out.push_back(to_json(r));
    return out;
}

}  // namespace finequest::matcher
