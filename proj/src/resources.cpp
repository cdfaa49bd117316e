#include "clozegen/resources.hpp"

#include <string>
#include <utility>

#include "clozegen/error.hpp"

namespace cloze::resources {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kTable[];
extern const std::size_t kTableSize;
}  // namespace detail

std::string_view get(std::string_view name)
{
    for (std::size_t i = 0; i < detail::kTableSize; ++i)
        if (detail::kTable[i].first == name)
            return detail::kTable[i].second;
    throw Error(Errc::IoError, "no bundled resource named '" + std::string(name) + "'");
}

std::vector<std::string_view> names()
{
    std::vector<std::string_view> out;
    for (std::size_t i = 0; i < detail::kTableSize; ++i)
        out.push_back(detail::kTable[i].first);
    return out;
}

}  // namespace cloze::resources
