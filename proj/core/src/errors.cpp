#include "finequest/errors.hpp"

namespace finequest {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::ParseError: return "ParseError";
        case Errc::ValidationError: return "ValidationError";
        case Errc::DimensionError: return "DimensionError";
        case Errc::UnknownSportCode: return "UnknownSportCode";
        case Errc::IoError: return "IoError";
        case Errc::TooFewFrames: return "TooFewFrames";
        case Errc::SignalTooShort: return "SignalTooShort";
        case Errc::BackendUnavailable: return "BackendUnavailable";
        case Errc::BackendError: return "BackendError";
        case Errc::Timeout: return "Timeout";
        case Errc::VocabMismatch: return "VocabMismatch";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::MissingAffirmativeToken: return "MissingAffirmativeToken";
        case Errc::EmptyClipList: return "EmptyClipList";
        case Errc::ZeroVector: return "ZeroVector";
        case Errc::EmptyGraph: return "EmptyGraph";
        case Errc::NoRelationSentences: return "NoRelationSentences";
        case Errc::EmptyMatches: return "EmptyMatches";
        case Errc::UnparseableResponse: return "UnparseableResponse";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ValidationError::ValidationError(std::string node_id, std::string invariant)
    : Error(Errc::ValidationError, "node '" + node_id + "': " + invariant),
      node_id_(std::move(node_id)),
      invariant_(std::move(invariant)) {}

}  // namespace finequest
