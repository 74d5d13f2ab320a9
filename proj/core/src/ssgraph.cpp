#include "finequest/ssgraph.hpp"

#include "finequest/backends.hpp"
#include "finequest/errors.hpp"
#include "finequest/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace finequest::ssgraph {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kSportCodes{"G", "D", "B1", "S", "I", "T", "B2", "B3", "V"};

[[noreturn]] void parse_fail(const std::string &where, const std::string &what) {
    throw Error(Errc::ParseError, where + ": " + what);
}

const json &field(const json &obj, const char *key, const std::string &where) {
    if (!obj.is_object()) parse_fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
    return *it;
}

std::string string_field(const json &obj, const char *key, const std::string &where) {
    const json &v = field(obj, key, where);
    if (!v.is_string()) parse_fail(where, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::string optional_string(const json &obj, const char *key, const std::string &where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) parse_fail(where, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

const json &array_field(const json &obj, const char *key, const std::string &where, bool required = true) {
    static const json empty = json::array();
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) parse_fail(where, std::string("missing field '") + key + "'");
        return empty;
    }
    if (!it->is_array()) parse_fail(where, std::string("field '") + key + "' must be an array");
    return *it;
}

long long integer_value(const json &v, const std::string &where, const char *key) {
    if (!v.is_number_integer()) parse_fail(where, std::string("field '") + key + "' must be an integer");
    return v.get<long long>();
}

Embedding embedding_field(const json &v, const std::string &where, const char *key) {
    if (!v.is_array()) parse_fail(where, std::string("field '") + key + "' must be an array of numbers");
    Embedding out;
    out.reserve(v.size());
    for (const auto &x : v) {
        if (!x.is_number()) parse_fail(where, std::string("field '") + key + "' must contain only numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

void check_embedding(const Embedding &e, std::size_t dim, const std::string &node_id, const char *what) {
    if (e.size() != dim) {
        throw Error(Errc::DimensionError, "node '" + node_id + "': " + what + " has length " +
                                              std::to_string(e.size()) + ", expected " + std::to_string(dim));
    }
    bool any_nonzero = false;
    for (double x : e) {
        if (!std::isfinite(x)) throw ValidationError(node_id, std::string(what) + " must be finite");
        any_nonzero = any_nonzero || x != 0.0;
    }
    if (!any_nonzero) throw ValidationError(node_id, std::string(what) + " must not be all-zero");
}

bool is_negation_of(const std::string &negative, const std::string &positive) {
    static constexpr std::string_view token = " not ";
    for (auto pos = negative.find(token); pos != std::string::npos; pos = negative.find(token, pos + 1)) {
        std::string removed = negative.substr(0, pos) + " " + negative.substr(pos + token.size());
        if (removed == positive) return true;
    }
    return false;
}

bool frame_has_label(const SceneGraphFrame &frame, const std::string &label) {
    return std::ranges::any_of(frame.triplets,
                               [&](const RelationTriplet &t) { return t.subject == label || t.object == label; });
}

void validate_element(const ElementNode &e, std::size_t dim) {
    check_embedding(e.description_embedding, dim, e.node_id, "description_embedding");
    check_embedding(e.instance_embedding, dim, e.node_id, "instance_embedding");

    for (std::size_t f = 0; f < e.scene_frames.size(); ++f) {
        const auto &frame = e.scene_frames[f];
        if (f > 0 && frame.frame_index <= e.scene_frames[f - 1].frame_index) {
            throw ValidationError(e.node_id, "scene frame indices must strictly increase (frame " +
                                                 std::to_string(frame.frame_index) + ")");
        }
        for (const auto &t : frame.triplets) {
            if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
                throw ValidationError(e.node_id, "triplet subject, predicate and object must be non-empty (frame " +
                                                     std::to_string(frame.frame_index) + ")");
            }
        }
        for (const auto &edge : frame.coref_edges) {
            const std::string where = "coref edge '" + edge.label + "' in frame " + std::to_string(frame.frame_index);
            if (edge.to_frame != edge.from_frame + 1) throw ValidationError(e.node_id, where + ": to_frame must equal from_frame + 1");
            if (edge.to_frame != static_cast<long long>(frame.frame_index)) {
                throw ValidationError(e.node_id, where + ": to_frame must be the frame that holds the edge");
            }
            auto prev = std::ranges::find_if(e.scene_frames, [&](const SceneGraphFrame &sf) {
                return static_cast<long long>(sf.frame_index) == edge.from_frame;
            });
            if (prev == e.scene_frames.end()) throw ValidationError(e.node_id, where + ": previous frame is missing");
            if (!frame_has_label(*prev, edge.label) || !frame_has_label(frame, edge.label)) {
                throw ValidationError(e.node_id, where + ": label must appear in both frames");
            }
        }
    }

    for (std::size_t s = 0; s < e.relation_sentences.size(); ++s) {
        const auto &rs = e.relation_sentences[s];
        const std::string where = "relation sentence " + std::to_string(s);
        if (e.triplet_at(rs.triplet_ref) == nullptr) throw ValidationError(e.node_id, where + ": triplet_ref out of range");
        if (!is_negation_of(rs.negative_text, rs.positive_text)) {
            throw ValidationError(e.node_id, where + ": negative_text must equal positive_text with 'not' inserted");
        }
        check_embedding(rs.positive_embedding, dim, e.node_id, "positive_embedding");
        check_embedding(rs.negative_embedding, dim, e.node_id, "negative_embedding");
    }
}

RelationTriplet parse_triplet(const json &j, const std::string &where) {
    RelationTriplet t;
    t.subject = string_field(j, "subject", where);
    t.predicate = string_field(j, "predicate", where);
    t.object = string_field(j, "object", where);
    const std::string kind = optional_string(j, "kind", where);
    if (!kind.empty()) {
        try {
            t.kind = parse_relation_kind(kind);
        } catch (const Error &) {
            parse_fail(where, "unknown relation kind '" + kind + "'");
        }
    }
    return t;
}

ElementNode parse_element(const json &j, SportCode sport, std::size_t dim, const LoadOptions &options,
                          const std::string &where_parent) {
    ElementNode e;
    e.node_id = string_field(j, "id", where_parent);
    const std::string where = "element '" + e.node_id + "'";
    e.sport_code = sport;
    if (const std::string declared = optional_string(j, "sport_code", where); !declared.empty()) {
        SportCode code{};
        try {
            code = parse_sport_code(declared);
        } catch (const Error &) {
            throw ValidationError(e.node_id, "sport_code '" + declared + "' is not one of the nine categories");
        }
        if (code != sport) throw ValidationError(e.node_id, "sport_code does not match the enclosing sport");
    }
    e.terminology = string_field(j, "terminology", where);
    e.description_text = string_field(j, "description", where);
    e.description_embedding = embedding_field(field(j, "description_embedding", where), where, "description_embedding");
    e.instance_embedding = embedding_field(field(j, "instance_embedding", where), where, "instance_embedding");

    for (const auto &fj : array_field(j, "scene_frames", where, false)) {
        SceneGraphFrame frame;
        const long long idx = integer_value(field(fj, "frame_index", where), where, "frame_index");
        if (idx < 0) throw ValidationError(e.node_id, "frame_index must be non-negative");
        frame.frame_index = static_cast<std::size_t>(idx);
        const std::string fwhere = where + " frame " + std::to_string(idx);
        for (const auto &tj : array_field(fj, "triplets", fwhere, false)) frame.triplets.push_back(parse_triplet(tj, fwhere));
        for (const auto &cj : array_field(fj, "coref_edges", fwhere, false)) {
            CorefEdge edge;
            edge.label = string_field(cj, "label", fwhere);
            edge.from_frame = integer_value(field(cj, "from_frame", fwhere), fwhere, "from_frame");
            edge.to_frame = integer_value(field(cj, "to_frame", fwhere), fwhere, "to_frame");
            frame.coref_edges.push_back(std::move(edge));
        }
        e.scene_frames.push_back(std::move(frame));
    }

    for (const auto &sj : array_field(j, "relation_sentences", where, false)) {
        RelationSentence rs;
        const long long ref = integer_value(field(sj, "triplet_ref", where), where, "triplet_ref");
        if (ref < 0) throw ValidationError(e.node_id, "triplet_ref must be non-negative");
        rs.triplet_ref = static_cast<std::size_t>(ref);
        const RelationTriplet *t = e.triplet_at(rs.triplet_ref);
        if (t == nullptr) throw ValidationError(e.node_id, "triplet_ref " + std::to_string(ref) + " out of range");
        rs.positive_text = optional_string(sj, "positive_text", where);
        rs.negative_text = optional_string(sj, "negative_text", where);
        if (rs.positive_text.empty()) rs.positive_text = format_relation(*t, false);
        if (rs.negative_text.empty()) rs.negative_text = format_relation(*t, true);

        if (options.relation_embeddings == RelationEmbeddingMode::Compute) {
            rs.positive_embedding = backends::embed_text(*options.embedder, rs.positive_text);
            rs.negative_embedding = backends::embed_text(*options.embedder, rs.negative_text);
        } else {
            if (!sj.contains("positive_embedding") || !sj.contains("negative_embedding")) {
                throw ValidationError(e.node_id, "relation sentence embeddings missing (load in compute mode to derive them)");
            }
            rs.positive_embedding = embedding_field(sj.at("positive_embedding"), where, "positive_embedding");
            rs.negative_embedding = embedding_field(sj.at("negative_embedding"), where, "negative_embedding");
        }
        e.relation_sentences.push_back(std::move(rs));
    }

    validate_element(e, dim);
    return e;
}

json embedding_json(const Embedding &e) { return json(e); }

}  // namespace

std::string_view to_string(SportCode code) noexcept { return kSportCodes[static_cast<std::size_t>(code)]; }

SportCode parse_sport_code(std::string_view text) {
    for (std::size_t i = 0; i < kSportCodes.size(); ++i) {
        if (kSportCodes[i] == text) return static_cast<SportCode>(i);
    }
    throw Error(Errc::UnknownSportCode, "'" + std::string(text) + "' is not one of G, D, B1, S, I, T, B2, B3, V");
}

std::string_view to_string(RelationKind kind) noexcept {
    switch (kind) {
        case RelationKind::Spatial: return "spatial";
        case RelationKind::Action: return "action";
        case RelationKind::Causal: return "causal";
        case RelationKind::Temporal: return "temporal";
    }
    return "spatial";
}

RelationKind parse_relation_kind(std::string_view text) {
    if (text == "spatial") return RelationKind::Spatial;
    if (text == "action") return RelationKind::Action;
    if (text == "causal") return RelationKind::Causal;
    if (text == "temporal") return RelationKind::Temporal;
    throw Error(Errc::ParseError, "unknown relation kind '" + std::string(text) + "'");
}

const RelationTriplet *ElementNode::triplet_at(std::size_t flat_index) const noexcept {
    for (const auto &frame : scene_frames) {
        if (flat_index < frame.triplets.size()) return &frame.triplets[flat_index];
        flat_index -= frame.triplets.size();
    }
    return nullptr;
}

std::vector<const ElementNode *> SportsGraph::elements() const {
    std::vector<const ElementNode *> out;
    for (const auto &sport : sports)
        for (const auto &event : sport.events)
            for (const auto &set : event.sets)
                for (const auto &element : set.elements) out.push_back(&element);
    return out;
}

std::size_t SportsGraph::element_count() const noexcept {
    std::size_t n = 0;
    for (const auto &sport : sports)
        for (const auto &event : sport.events)
            for (const auto &set : event.sets) n += set.elements.size();
    return n;
}

const ElementNode *SportsGraph::find_element(std::string_view node_id) const noexcept {
    for (const auto &sport : sports)
        for (const auto &event : sport.events)
            for (const auto &set : event.sets)
                for (const auto &element : set.elements)
                    if (element.node_id == node_id) return &element;
    return nullptr;
}

std::string format_relation(const RelationTriplet &triplet, bool negate) {
    std::string out = "The " + triplet.subject + " ";
    if (negate) out += "not ";
    out += triplet.predicate + " the " + triplet.object;
    return out;
}

std::vector<const ElementNode *> elements_of_sport(const SportsGraph &graph, SportCode code) {
    std::vector<const ElementNode *> out;
    for (const auto &sport : graph.sports) {
        if (sport.code != code) continue;
        for (const auto &event : sport.events)
            for (const auto &set : event.sets)
                for (const auto &element : set.elements) out.push_back(&element);
    }
    return out;
}

std::vector<const ElementNode *> elements_of_sport(const SportsGraph &graph, std::string_view sport_code) {
    return elements_of_sport(graph, parse_sport_code(sport_code));
}

SportsGraph parse_graph(const json &doc, const LoadOptions &options) {
    if (options.relation_embeddings == RelationEmbeddingMode::Compute && options.embedder == nullptr) {
        throw Error(Errc::BackendUnavailable, "compute-mode graph loading needs an embedder");
    }
    const std::string root = "graph";
    SportsGraph g;
    g.format_version = string_field(doc, "format_version", root);
    const long long dim = integer_value(field(doc, "embedding_dim", root), root, "embedding_dim");
    if (dim <= 0) throw ValidationError("graph", "embedding_dim must be positive");
    g.embedding_dim = static_cast<std::size_t>(dim);
    if (options.embedder != nullptr && options.relation_embeddings == RelationEmbeddingMode::Compute &&
        options.embedder->dim() != g.embedding_dim) {
        throw Error(Errc::DimensionError, "embedder dimension " + std::to_string(options.embedder->dim()) +
                                              " does not match graph embedding_dim " + std::to_string(dim));
    }

    std::set<std::string> ids;
    auto claim = [&](const std::string &id) {
        if (id.empty()) throw ValidationError("graph", "node identifiers must be non-empty");
        if (!ids.insert(id).second) throw ValidationError(id, "node identifiers must be unique graph-wide");
    };
    std::set<SportCode> seen_codes;

    for (const auto &sj : array_field(doc, "sports", root)) {
        SportEntry sport;
        const std::string code = string_field(sj, "code", "sport");
        try {
            sport.code = parse_sport_code(code);
        } catch (const Error &) {
            throw ValidationError(code, "sport code must be one of the nine categories");
        }
        if (!seen_codes.insert(sport.code).second) throw ValidationError(code, "sport appears more than once");
        sport.name = optional_string(sj, "name", "sport " + code);
        for (const auto &ej : array_field(sj, "events", "sport " + code, false)) {
            EventNode event;
            event.id = string_field(ej, "id", "event");
            claim(event.id);
            event.name = optional_string(ej, "name", "event " + event.id);
            for (const auto &tj : array_field(ej, "sets", "event " + event.id, false)) {
                SetNode set;
                set.id = string_field(tj, "id", "set");
                claim(set.id);
                set.name = optional_string(tj, "name", "set " + set.id);
                for (const auto &elj : array_field(tj, "elements", "set " + set.id, false)) {
                    ElementNode e = parse_element(elj, sport.code, g.embedding_dim, options, "set " + set.id);
                    claim(e.node_id);
                    set.elements.push_back(std::move(e));
                }
                event.sets.push_back(std::move(set));
            }
            sport.events.push_back(std::move(event));
        }
        g.sports.push_back(std::move(sport));
    }
    return g;
}

SportsGraph load_graph(const std::string &path, const LoadOptions &options) {
    const std::string text = util::read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(Errc::ParseError, path + ": " + e.what());
    }
    return parse_graph(doc, options);
}

void validate(const SportsGraph &graph) {
    if (graph.embedding_dim == 0) throw ValidationError("graph", "embedding_dim must be positive");
    std::set<std::string> ids;
    std::set<SportCode> codes;
    auto claim = [&](const std::string &id) {
        if (!ids.insert(id).second) throw ValidationError(id, "node identifiers must be unique graph-wide");
    };
    for (const auto &sport : graph.sports) {
        if (!codes.insert(sport.code).second) throw ValidationError(std::string(to_string(sport.code)), "sport appears more than once");
        for (const auto &event : sport.events) {
            claim(event.id);
            for (const auto &set : event.sets) {
                claim(set.id);
                for (const auto &e : set.elements) {
                    claim(e.node_id);
                    if (e.sport_code != sport.code) throw ValidationError(e.node_id, "sport_code does not match the enclosing sport");
                    validate_element(e, graph.embedding_dim);
                }
            }
        }
    }
}

json graph_to_json(const SportsGraph &graph) {
    json sports = json::array();
    for (const auto &sport : graph.sports) {
        json events = json::array();
        for (const auto &event : sport.events) {
            json sets = json::array();
            for (const auto &set : event.sets) {
                json elements = json::array();
                for (const auto &e : set.elements) {
                    json frames = json::array();
                    for (const auto &f : e.scene_frames) {
                        json triplets = json::array();
                        for (const auto &t : f.triplets) {
                            triplets.push_back({{"subject", t.subject},
                                                {"predicate", t.predicate},
                                                {"object", t.object},
                                                {"kind", to_string(t.kind)}});
                        }
                        json edges = json::array();
                        for (const auto &c : f.coref_edges) {
                            edges.push_back({{"label", c.label}, {"from_frame", c.from_frame}, {"to_frame", c.to_frame}});
                        }
                        frames.push_back({{"frame_index", f.frame_index}, {"triplets", triplets}, {"coref_edges", edges}});
                    }
                    json sentences = json::array();
                    for (const auto &rs : e.relation_sentences) {
                        sentences.push_back({{"triplet_ref", rs.triplet_ref},
                                             {"positive_text", rs.positive_text},
                                             {"negative_text", rs.negative_text},
                                             {"positive_embedding", embedding_json(rs.positive_embedding)},
                                             {"negative_embedding", embedding_json(rs.negative_embedding)}});
                    }
                    elements.push_back({{"id", e.node_id},
                                        {"terminology", e.terminology},
                                        {"description", e.description_text},
                                        {"description_embedding", embedding_json(e.description_embedding)},
                                        {"instance_embedding", embedding_json(e.instance_embedding)},
                                        {"scene_frames", frames},
                                        {"relation_sentences", sentences}});
                }
                sets.push_back({{"id", set.id}, {"name", set.name}, {"elements", elements}});
            }
            events.push_back({{"id", event.id}, {"name", event.name}, {"sets", sets}});
        }
        sports.push_back({{"code", to_string(sport.code)}, {"name", sport.name}, {"events", events}});
    }
    return {{"format_version", graph.format_version}, {"embedding_dim", graph.embedding_dim}, {"sports", sports}};
}

void save_graph(const SportsGraph &graph, const std::string &path) {
    util::write_file(path, graph_to_json(graph).dump(2) + "\n");
}

GraphStats compute_stats(const SportsGraph &graph) {
    GraphStats s;
    s.sports = graph.sports.size();
    for (const auto &sport : graph.sports) {
        s.events += sport.events.size();
        for (const auto &event : sport.events) {
            s.sets += event.sets.size();
            for (const auto &set : event.sets) {
                s.elements += set.elements.size();
                for (const auto &e : set.elements) {
                    s.scene_frames += e.scene_frames.size();
                    s.relation_sentences += e.relation_sentences.size();
                    for (const auto &f : e.scene_frames) {
                        s.triplets += f.triplets.size();
                        s.coref_edges += f.coref_edges.size();
                    }
                }
            }
        }
    }
    return s;
}

}  // namespace finequest::ssgraph
