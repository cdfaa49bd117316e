#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "clozegen/word_group.hpp"

// Headword list ingestion and the word-group CSV file.
//
// Headword CSV (input):   headword,sublist
// Word-group CSV:         headword,sublist,pos_tag,forms
//   one row per (headword, tag); forms are '|'-separated. Rows of one
//   headword are contiguous; tags appear in canonical order and forms are
//   sorted when written.
namespace cloze::wordlist {

inline constexpr std::string_view kHeadwordHeader = "headword,sublist";
inline constexpr std::string_view kWordGroupHeader = "headword,sublist,pos_tag,forms";

/// Letters with internal hyphens/apostrophes only.
bool is_valid_headword(std::string_view word);

std::vector<HeadwordEntry> parse_headword_list(std::string_view raw_csv);
std::vector<HeadwordEntry> read_headword_list(const std::string& path);

std::string format_word_groups(const WordGroupSet& set);
WordGroupSet parse_word_groups(std::string_view text, std::string source_label = {});

void write_word_groups(const WordGroupSet& set, const std::string& path);
WordGroupSet load_word_groups(const std::string& path);

/// True when the first line of `text` is the headword-list header rather
/// than the word-group header.
bool looks_like_headword_list(std::string_view text);

}  // namespace cloze::wordlist
