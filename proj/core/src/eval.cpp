#include "finequest/eval.hpp"

#include "finequest/errors.hpp"
#include "finequest/util.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

namespace finequest::eval {

using nlohmann::json;

std::string_view to_string(Difficulty d) noexcept {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "easy";
}

std::string_view to_string(Subset s) noexcept {
    switch (s) {
        case Subset::Event: return "event";
        case Subset::Set: return "set";
        case Subset::Element: return "element";
    }
    return "event";
}

namespace {

[[noreturn]] void row_error(std::size_t row, const std::string &what) {
    throw Error(Errc::ParseError, "row " + std::to_string(row) + ": " + what);
}

const json *field(const json &doc, const char *key, const char *alias = nullptr) {
    if (auto it = doc.find(key); it != doc.end()) return &*it;
    if (alias != nullptr) {
        if (auto it = doc.find(alias); it != doc.end()) return &*it;
    }
    return nullptr;
}

std::string required_string(const json &doc, std::size_t row, const char *key, const char *alias = nullptr) {
    const json *v = field(doc, key, alias);
    if (v == nullptr || !v->is_string()) row_error(row, std::string("'") + key + "' must be a string");
    return v->get<std::string>();
}

std::string format_accuracy(const Accuracy &a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", a.value());
    return std::string(buf) + " (" + std::to_string(a.correct) + "/" + std::to_string(a.total) + ")";
}

json accuracy_json(const Accuracy &a) {
    return {{"correct", a.correct}, {"total", a.total}, {"accuracy", a.total == 0 ? json(nullptr) : json(a.value())}};
}

}  // namespace

QaItem parse_qa_item(const json &doc, std::size_t row) {
    if (!doc.is_object()) row_error(row, "record must be a JSON object");
    QaItem item;
    const json *id = field(doc, "id");
    if (id == nullptr || !(id->is_string() || id->is_number_integer())) row_error(row, "'id' must be a string or integer");
    item.id = id->is_string() ? id->get<std::string>() : id->dump();
    item.video_ref = required_string(doc, row, "video_ref", "video");
    item.question = required_string(doc, row, "question");

    const json *options = field(doc, "options");
    if (options == nullptr) row_error(row, "'options' missing");
    if (options->is_array()) {
        for (const auto &o : *options) {
            if (!o.is_string()) row_error(row, "options must be strings");
            item.options.push_back(o.get<std::string>());
        }
    } else if (options->is_object()) {
        for (const char *key : {"A", "B", "C", "D"}) {
            auto it = options->find(key);
            if (it == options->end() || !it->is_string()) row_error(row, std::string("option '") + key + "' missing");
            item.options.push_back(it->get<std::string>());
        }
        if (options->size() != 4) row_error(row, "options object must have exactly the keys A-D");
    } else {
        row_error(row, "'options' must be an array or an object");
    }
    if (item.options.size() != 4) row_error(row, "exactly 4 options are required");
    if (std::set<std::string>(item.options.begin(), item.options.end()).size() != 4) row_error(row, "options must be distinct");

    const std::string gold = required_string(doc, row, "gold", "answer");
    if (gold.size() != 1 || gold[0] < 'A' || gold[0] > 'D') row_error(row, "gold must be one of A, B, C, D");
    item.gold = gold[0];

    if (const json *d = field(doc, "difficulty"); d != nullptr && !d->is_null()) {
        const std::string v = d->is_string() ? d->get<std::string>() : "";
        if (v == "easy") item.difficulty = Difficulty::Easy;
        else if (v == "medium") item.difficulty = Difficulty::Medium;
        else if (v == "hard") item.difficulty = Difficulty::Hard;
        else row_error(row, "difficulty must be easy, medium, hard or null");
    }
    if (const json *s = field(doc, "subset"); s != nullptr && !s->is_null()) {
        const std::string v = s->is_string() ? s->get<std::string>() : "";
        if (v == "event") item.subset = Subset::Event;
        else if (v == "set") item.subset = Subset::Set;
        else if (v == "element") item.subset = Subset::Element;
        else row_error(row, "subset must be event, set, element or null");
    }
    return item;
}

std::vector<QaItem> parse_dataset(const std::string &jsonl, const std::string &source) {
    std::vector<QaItem> items;
    std::set<std::string> ids;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error &e) {
            throw Error(Errc::ParseError, source + " row " + std::to_string(row) + ": invalid JSON (" + e.what() + ")");
        }
        try {
            items.push_back(parse_qa_item(doc, row));
        } catch (const Error &e) {
            throw Error(Errc::ParseError, source + " " + std::string(e.what()).substr(std::string("ParseError: ").size()));
        }
        if (!ids.insert(items.back().id).second) {
            throw Error(Errc::ParseError, source + " row " + std::to_string(row) + ": duplicate id '" + items.back().id + "'");
        }
    }
    return items;
}

std::vector<QaItem> load_dataset(const std::string &path) { return parse_dataset(util::read_file(path), path); }

json to_json(const QaItem &item) {
    return {{"id", item.id},
            {"video_ref", item.video_ref},
            {"question", item.question},
            {"options", item.options},
            {"gold", std::string(1, item.gold)},
            {"difficulty", item.difficulty ? json(std::string(to_string(*item.difficulty))) : json(nullptr)},
            {"subset", item.subset ? json(std::string(to_string(*item.subset))) : json(nullptr)}};
}

EvalReport build_report(std::vector<ItemVerdict> verdicts) {
    EvalReport report;
    for (Difficulty d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) report.per_difficulty[std::string(to_string(d))];
    for (Subset s : {Subset::Event, Subset::Set, Subset::Element}) report.per_subset[std::string(to_string(s))];
    for (const auto &v : verdicts) {
        const std::size_t hit = v.correct ? 1 : 0;
        report.overall.correct += hit;
        ++report.overall.total;
        if (v.difficulty) {
            auto &a = report.per_difficulty[std::string(to_string(*v.difficulty))];
            a.correct += hit;
            ++a.total;
        }
        if (v.subset) {
            auto &a = report.per_subset[std::string(to_string(*v.subset))];
            a.correct += hit;
            ++a.total;
        }
    }
    report.items = std::move(verdicts);
    return report;
}

EvalReport evaluate(const std::vector<QaItem> &items, const router::Engine &engine, std::size_t workers) {
    std::vector<ItemVerdict> verdicts(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            const QaItem &item = items[i];
            ItemVerdict &v = verdicts[i];
            v.id = item.id;
            v.gold = item.gold;
            v.difficulty = item.difficulty;
            v.subset = item.subset;
            try {
                const auto routed = engine.answer(item.video_ref, item.question, item.options);
                v.mode = std::string(router::to_string(routed.mode));
                v.answer_text = routed.text;
                v.predicted = routed.letter;
                if (!v.predicted) v.diagnostic = "unparseable answer";
            } catch (const std::exception &e) {
                v.mode = "error";
                v.diagnostic = e.what();
            }
            v.correct = v.predicted && *v.predicted == item.gold;
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(workers, items.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
        work();
    }
    return build_report(std::move(verdicts));
}

json to_json(const EvalReport &report) {
    json per_difficulty = json::object();
    for (const auto &[k, a] : report.per_difficulty) per_difficulty[k] = accuracy_json(a);
    json per_subset = json::object();
    for (const auto &[k, a] : report.per_subset) per_subset[k] = accuracy_json(a);
    json items = json::array();
    for (const auto &v : report.items) {
        items.push_back({{"id", v.id},
                         {"gold", std::string(1, v.gold)},
                         {"predicted", v.predicted ? json(std::string(1, *v.predicted)) : json(nullptr)},
                         {"correct", v.correct},
                         {"mode", v.mode},
                         {"answer_text", v.answer_text},
                         {"diagnostic", v.diagnostic},
                         {"difficulty", v.difficulty ? json(std::string(to_string(*v.difficulty))) : json(nullptr)},
                         {"subset", v.subset ? json(std::string(to_string(*v.subset))) : json(nullptr)}});
    }
    return {{"item_count", report.overall.total},
            {"overall", accuracy_json(report.overall)},
            {"per_difficulty", per_difficulty},
            {"per_subset", per_subset},
            {"items", items}};
}

std::string to_text(const EvalReport &report) {
    std::ostringstream out;
    out << "items: " << report.overall.total << "\n";
    out << "overall: " << format_accuracy(report.overall) << "\n";
    for (Difficulty d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
        const auto &a = report.per_difficulty.at(std::string(to_string(d)));
        out << "difficulty " << to_string(d) << ": " << (a.total == 0 ? std::string("n/a") : format_accuracy(a)) << "\n";
    }
    for (Subset s : {Subset::Event, Subset::Set, Subset::Element}) {
        const auto &a = report.per_subset.at(std::string(to_string(s)));
        out << "subset " << to_string(s) << ": " << (a.total == 0 ? std::string("n/a") : format_accuracy(a)) << "\n";
    }
    for (const auto &v : report.items) {
        out << (v.correct ? "ok   " : "FAIL ") << v.id << " gold=" << v.gold
            << " predicted=" << (v.predicted ? std::string(1, *v.predicted) : std::string("-")) << " mode=" << v.mode;
        if (!v.diagnostic.empty()) out << " (" << v.diagnostic << ")";
        out << "\n";
    }
    return out.str();
}

}  // namespace finequest::eval
