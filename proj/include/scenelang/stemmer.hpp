#pragma once

#include <string>

namespace scenelang {

// Porter stemmer (Porter 1980). Input must be lowercase ASCII; words of
// length <= 2 are returned unchanged.
std::string porter_stem(const std::string& word);

} // namespace scenelang
