#include "clozegen/prompts.hpp"

#include "clozegen/resources.hpp"

namespace cloze::prompts {

namespace {
std::string_view load(std::string_view name)
{
    std::string_view t = resources::get(name);
    if (!t.empty() && t.back() == '\n')
        t.remove_suffix(1);
    return t;
}
}  // namespace

std::string_view stem_template() { return load("prompts/stem_v1.txt"); }
std::string_view judgment_template() { return load("prompts/judgment_v1.txt"); }
std::string_view whole_sentence_template() { return load("prompts/whole_sentence_v1.txt"); }
std::string_view pos_check_template() { return load("prompts/pos_check_v1.txt"); }
std::string_view pos_tags_template() { return load("prompts/pos_tags_v1.txt"); }

}  // namespace cloze::prompts
