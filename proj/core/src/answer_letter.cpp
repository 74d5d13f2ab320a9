#include "finequest/answer_letter.hpp"

#include <cctype>

namespace finequest::eval {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string fold(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])) != 0) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1])) != 0) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    return out;
}

}  // namespace

std::optional<char> extract_letter(std::string_view answer, const std::vector<std::string> &options) {
    for (std::size_t i = 0; i < answer.size(); ++i) {
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(answer[i])));
        if (up < 'A' || up > 'D') continue;
        const bool left_ok = i == 0 || !is_word_char(answer[i - 1]);
        const bool right_ok = i + 1 == answer.size() || !is_word_char(answer[i + 1]);
        if (left_ok && right_ok) return up;
    }
    const std::string folded = fold(answer);
    if (folded.empty()) return std::nullopt;
    for (std::size_t k = 0; k < options.size() && k < 4; ++k) {
        if (fold(options[k]) == folded) return static_cast<char>('A' + k);
    }
    return std::nullopt;
}

}  // namespace finequest::eval
