#pragma once

#include <string>

#include "btdetect/errors.hpp"

namespace btdetect {

enum class Label { human, machine };

inline const char* to_string(Label label) {
    return label == Label::machine ? "machine" : "human";
}

inline Label label_from_string(const std::string& name) {
    if (name == "human") return Label::human;
    if (name == "machine") return Label::machine;
    throw FormatError("unknown label '" + name + "' (expected 'human' or 'machine')");
}

}  // namespace btdetect
