#pragma once

#include <string_view>

// Versioned prompt templates (resources/prompts/*_v1.txt) with the file's
// final newline dropped. Placeholders are written {{name}}.
namespace cloze::prompts {

std::string_view stem_template();
std::string_view judgment_template();
std::string_view whole_sentence_template();
std::string_view pos_check_template();
std::string_view pos_tags_template();

}  // namespace cloze::prompts
