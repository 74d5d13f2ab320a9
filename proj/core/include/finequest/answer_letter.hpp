#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finequest::eval {

/// Option letter named by a free-text answer: the first standalone A-D (either case),
/// else the option whose text equals the whole answer ignoring case and surrounding
/// whitespace. nullopt means unparseable.
std::optional<char> extract_letter(std::string_view answer, const std::vector<std::string> &options);

}  // namespace finequest::eval
