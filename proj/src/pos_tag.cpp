#include "clozegen/pos_tag.hpp"

#include "clozegen/error.hpp"

namespace cloze {

namespace {
constexpr std::array<std::string_view, 14> kNames = {
    "NN", "NNS", "VB", "VBD", "VBG", "VBN", "VBP",
    "VBZ", "JJ", "JJR", "JJS", "RB", "RBR", "RBS",
};
}

std::string_view to_string(PosTag tag)
{
    return kNames[static_cast<std::size_t>(tag)];
}

std::optional<PosTag> parse_pos_tag(std::string_view text)
{
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == text)
            return kAllPosTags[i];
    return std::nullopt;
}

PosTag parse_pos_tag_or_throw(std::string_view text)
{
    if (auto tag = parse_pos_tag(text))
        return *tag;
    throw Error(Errc::UnknownPosTag, "tag '" + std::string(text) + "' is not in the supported Penn set");
}

std::string to_string(const PosTagSet& tags)
{
    std::string out;
    for (PosTag t : tags) {
        if (!out.empty())
            out += ',';
        out += to_string(t);
    }
    return out;
}

bool is_noun(PosTag tag) { return tag == PosTag::NN || tag == PosTag::NNS; }

bool is_verb(PosTag tag) { return tag >= PosTag::VB && tag <= PosTag::VBZ; }

bool is_adjective(PosTag tag) { return tag >= PosTag::JJ && tag <= PosTag::JJS; }

bool is_adverb(PosTag tag) { return tag >= PosTag::RB && tag <= PosTag::RBS; }

}  // namespace cloze
