#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace finequest {

/// Every failure raised by the engine carries one of these codes.
enum class Errc {
    ParseError,
    ValidationError,
    DimensionError,
    UnknownSportCode,
    IoError,
    TooFewFrames,
    SignalTooShort,
    BackendUnavailable,
    BackendError,
    Timeout,
    VocabMismatch,
    LengthMismatch,
    MissingAffirmativeToken,
    EmptyClipList,
    ZeroVector,
    EmptyGraph,
    NoRelationSentences,
    EmptyMatches,
    UnparseableResponse,
    InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string &message);

    [[nodiscard]] Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

/// Raised by graph validation; names the offending node and the broken invariant.
class ValidationError : public Error {
  public:
    ValidationError(std::string node_id, std::string invariant);

    [[nodiscard]] const std::string &node_id() const noexcept { return node_id_; }
    [[nodiscard]] const std::string &invariant() const noexcept { return invariant_; }

  private:
    std::string node_id_;
    std::string invariant_;
};

}  // namespace finequest
