#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace cloze {

// Closed subset of the Penn Treebank tag set; nothing else can be
// represented.
enum class PosTag : std::uint8_t {
    NN, NNS,
    VB, VBD, VBG, VBN, VBP, VBZ,
    JJ, JJR, JJS,
    RB, RBR, RBS,
};

inline constexpr std::array<PosTag, 14> kAllPosTags = {
    PosTag::NN,  PosTag::NNS, PosTag::VB,  PosTag::VBD, PosTag::VBG,
    PosTag::VBN, PosTag::VBP, PosTag::VBZ, PosTag::JJ,  PosTag::JJR,
    PosTag::JJS, PosTag::RB,  PosTag::RBR, PosTag::RBS,
};

using PosTagSet = std::set<PosTag>;

std::string_view to_string(PosTag tag);

std::optional<PosTag> parse_pos_tag(std::string_view text);

/// Throws Error(UnknownPosTag) for anything outside the enumeration.
PosTag parse_pos_tag_or_throw(std::string_view text);

/// "NN,VB" style rendering, canonical order.
std::string to_string(const PosTagSet& tags);

bool is_noun(PosTag tag);
bool is_verb(PosTag tag);
bool is_adjective(PosTag tag);
bool is_adverb(PosTag tag);

}  // namespace cloze
