#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finequest {
namespace backends {
class Embedder;
}

namespace ssgraph {

using Embedding = std::vector<double>;

/// The nine sport categories: gymnastics, diving, basketball, soccer, ice hockey,
/// tennis, baseball, badminton, volleyball.
enum class SportCode { G, D, B1, S, I, T, B2, B3, V };

std::string_view to_string(SportCode code) noexcept;
/// Throws UnknownSportCode.
SportCode parse_sport_code(std::string_view text);

enum class RelationKind { Spatial, Action, Causal, Temporal };

std::string_view to_string(RelationKind kind) noexcept;
RelationKind parse_relation_kind(std::string_view text);

struct RelationTriplet {
    std::string subject;
    std::string predicate;
    std::string object;
    RelationKind kind = RelationKind::Spatial;

    bool operator==(const RelationTriplet &) const = default;
};

/// Links the entity `label` in frame `from_frame` to itself in `to_frame` (= from_frame + 1).
struct CorefEdge {
    std::string label;
    long long from_frame = 0;
    long long to_frame = 0;

    bool operator==(const CorefEdge &) const = default;
};

struct SceneGraphFrame {
    std::size_t frame_index = 0;
    std::vector<RelationTriplet> triplets;
    std::vector<CorefEdge> coref_edges;

    bool operator==(const SceneGraphFrame &) const = default;
};

struct RelationSentence {
    /// Flat index over the concatenated triplets of all scene frames of the element.
    std::size_t triplet_ref = 0;
    std::string positive_text;
    std::string negative_text;
    Embedding positive_embedding;
    Embedding negative_embedding;

    bool operator==(const RelationSentence &) const = default;
};

struct ElementNode {
    std::string node_id;
    SportCode sport_code = SportCode::G;
    std::string terminology;
    std::string description_text;
    Embedding description_embedding;
    Embedding instance_embedding;
    std::vector<SceneGraphFrame> scene_frames;
    std::vector<RelationSentence> relation_sentences;

    /// Triplet addressed by a flat `triplet_ref`, or nullptr when out of range.
    [[nodiscard]] const RelationTriplet *triplet_at(std::size_t flat_index) const noexcept;

    bool operator==(const ElementNode &) const = default;
};

struct SetNode {
    std::string id;
    std::string name;
    std::vector<ElementNode> elements;

    bool operator==(const SetNode &) const = default;
};

struct EventNode {
    std::string id;
    std::string name;
    std::vector<SetNode> sets;

    bool operator==(const EventNode &) const = default;
};

struct SportEntry {
    SportCode code = SportCode::G;
    std::string name;
    std::vector<EventNode> events;

    bool operator==(const SportEntry &) const = default;
};

/// Sport -> event -> set -> element forest. Immutable once loaded.
struct SportsGraph {
    std::string format_version = "1.0";
    std::size_t embedding_dim = 0;
    std::vector<SportEntry> sports;

    /// Every element in file order.
    [[nodiscard]] std::vector<const ElementNode *> elements() const;
    [[nodiscard]] std::size_t element_count() const noexcept;
    [[nodiscard]] const ElementNode *find_element(std::string_view node_id) const noexcept;

    bool operator==(const SportsGraph &) const = default;
};

/// "The {subject} {predicate} the {object}", with "not" after the subject when negated.
std::string format_relation(const RelationTriplet &triplet, bool negate);

/// All elements under `sport_code`, in file order. Throws UnknownSportCode for an invalid code.
std::vector<const ElementNode *> elements_of_sport(const SportsGraph &graph, std::string_view sport_code);
std::vector<const ElementNode *> elements_of_sport(const SportsGraph &graph, SportCode code);

enum class RelationEmbeddingMode {
    Precomputed,  ///< relation embeddings must be present in the file
    Compute,      ///< relation embeddings are produced by the embedder at load time
};

struct LoadOptions {
    RelationEmbeddingMode relation_embeddings = RelationEmbeddingMode::Precomputed;
    const backends::Embedder *embedder = nullptr;
};

/// Parses and eagerly validates a graph document.
SportsGraph parse_graph(const nlohmann::json &doc, const LoadOptions &options = {});
SportsGraph load_graph(const std::string &path, const LoadOptions &options = {});

nlohmann::json graph_to_json(const SportsGraph &graph);
void save_graph(const SportsGraph &graph, const std::string &path);

/// Re-checks every invariant; throws ValidationError / DimensionError.
void validate(const SportsGraph &graph);

struct GraphStats {
    std::size_t sports = 0;
    std::size_t events = 0;
    std::size_t sets = 0;
    std::size_t elements = 0;
    std::size_t scene_frames = 0;
    std::size_t triplets = 0;
    std::size_t coref_edges = 0;
    std::size_t relation_sentences = 0;
};

GraphStats compute_stats(const SportsGraph &graph);

}  // namespace ssgraph
}  // namespace finequest
