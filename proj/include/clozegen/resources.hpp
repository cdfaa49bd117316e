#pragma once

#include <string_view>
#include <vector>

// Files under resources/ are compiled into the library at build time.
namespace cloze::resources {

/// Contents of resources/<name>; throws Error(IoError) for unknown names.
std::string_view get(std::string_view name);

std::vector<std::string_view> names();

}  // namespace cloze::resources
