#pragma once

#include <string>

#include "btdetect/translator.hpp"

namespace btdetect::records {

// One BackTranslationRecord as a single JSON line (no trailing newline).
std::string serialize(const BackTranslationRecord& record);

// Inverse of serialize. Throws FormatError on malformed input.
BackTranslationRecord parse(const std::string& line);

}  // namespace btdetect::records
