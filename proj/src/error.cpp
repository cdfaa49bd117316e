#include "clozegen/error.hpp"

namespace cloze {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::EmptyList: return "EmptyList";
    case Errc::DuplicateHeadword: return "DuplicateHeadword";
    case Errc::UnknownPosTag: return "UnknownPosTag";
    case Errc::IoError: return "IoError";
    case Errc::UnknownWord: return "UnknownWord";
    case Errc::TagNotApplicable: return "TagNotApplicable";
    case Errc::EmptyConsensus: return "EmptyConsensus";
    case Errc::TransportError: return "TransportError";
    case Errc::ReplayMiss: return "ReplayMiss";
    case Errc::Timeout: return "Timeout";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::NoBackticks: return "NoBackticks";
    case Errc::MultipleKeys: return "MultipleKeys";
    case Errc::MissingVerdict: return "MissingVerdict";
    case Errc::NonBooleanField: return "NonBooleanField";
    case Errc::ConfigError: return "ConfigError";
    case Errc::GenerationExhausted: return "GenerationExhausted";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MissingTieBreak: return "MissingTieBreak";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::InsufficientOverlap: return "InsufficientOverlap";
    case Errc::BindError: return "BindError";
    case Errc::MalformedOutputFile: return "MalformedOutputFile";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

bool is_transport_failure(Errc code) noexcept
{
    return code == Errc::TransportError || code == Errc::ReplayMiss || code == Errc::Timeout;
}

}  // namespace cloze
