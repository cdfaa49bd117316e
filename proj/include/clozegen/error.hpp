#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cloze {

enum class Errc {
    MalformedCsv,
    EmptyList,
    DuplicateHeadword,
    UnknownPosTag,
    IoError,
    UnknownWord,
    TagNotApplicable,
    EmptyConsensus,
    TransportError,
    ReplayMiss,
    Timeout,
    NoJsonFound,
    MalformedJson,
    NoBackticks,
    MultipleKeys,
    MissingVerdict,
    NonBooleanField,
    ConfigError,
    GenerationExhausted,
    LengthMismatch,
    EmptyInput,
    MissingTieBreak,
    UnknownCategory,
    InsufficientOverlap,
    BindError,
    MalformedOutputFile,
    InvalidArgument,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// True for the gateway failures that map to a transport exit status.
bool is_transport_failure(Errc code) noexcept;

}  // namespace cloze
