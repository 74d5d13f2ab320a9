#pragma once

#include "finequest/answer_letter.hpp"
#include "finequest/router.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace finequest::eval {

enum class Difficulty { Easy, Medium, Hard };
enum class Subset { Event, Set, Element };

std::string_view to_string(Difficulty d) noexcept;
std::string_view to_string(Subset s) noexcept;

/// One multiple-choice record. JSON Lines form:
///   {"id": "q1", "video_ref": "...", "question": "...", "options": ["..", "..", "..", ".."],
///    "gold": "B", "difficulty": "easy", "subset": "element"}
/// `options` may also be an object keyed "A".."D"; "video" and "answer" are accepted
/// as aliases of "video_ref" and "gold".
struct QaItem {
    std::string id;
    std::string video_ref;
    std::string question;
    std::vector<std::string> options;
    char gold = 'A';
    std::optional<Difficulty> difficulty;
    std::optional<Subset> subset;

    bool operator==(const QaItem &) const = default;
};

/// Throws ParseError naming `row` (1-based line number).
QaItem parse_qa_item(const nlohmann::json &doc, std::size_t row);
/// Blank lines are skipped. Throws ParseError naming the offending row.
std::vector<QaItem> parse_dataset(const std::string &jsonl, const std::string &source = "dataset");
std::vector<QaItem> load_dataset(const std::string &path);
nlohmann::json to_json(const QaItem &item);

struct ItemVerdict {
    std::string id;
    char gold = 'A';
    std::optional<char> predicted;
    bool correct = false;
    std::string mode;  ///< "reactive", "deliberative" or "error"
    std::string answer_text;
    std::string diagnostic;
    std::optional<Difficulty> difficulty;
    std::optional<Subset> subset;
};

struct Accuracy {
    std::size_t correct = 0;
    std::size_t total = 0;

    [[nodiscard]] double value() const noexcept {
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct EvalReport {
    Accuracy overall;
    std::map<std::string, Accuracy> per_difficulty;  ///< keys easy, medium, hard
    std::map<std::string, Accuracy> per_subset;      ///< keys event, set, element
    std::vector<ItemVerdict> items;
};

/// Aggregates verdicts; the result depends only on the multiset of verdicts.
EvalReport build_report(std::vector<ItemVerdict> verdicts);

/// Answers every item through the engine with up to `workers` concurrent items. An
/// item whose pipeline fails is scored incorrect and carries the error as diagnostic.
EvalReport evaluate(const std::vector<QaItem> &items, const router::Engine &engine, std::size_t workers = 1);

nlohmann::json to_json(const EvalReport &report);
std::string to_text(const EvalReport &report);

}  // namespace finequest::eval
