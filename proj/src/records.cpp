#include "btdetect/records.hpp"

#include <nlohmann/json.hpp>

namespace btdetect::records {

namespace {

using nlohmann::json;

json sentence_to_json(const Sentence& s) {
    return json{{"text", s.text}, {"lang", s.language.code()}};
}

Sentence sentence_from_json(const json& j) {
    return Sentence{j.at("text").get<std::string>(), LanguageTag(j.at("lang").get<std::string>())};
}

}  // namespace

std::string serialize(const BackTranslationRecord& record) {
    return json{{"original", sentence_to_json(record.original)},
                {"pivot", sentence_to_json(record.pivot)},
                {"back_translation", sentence_to_json(record.back_translation)},
                {"engine_id", record.engine_id},
                {"pass_count", record.pass_count},
                {"timestamp", record.timestamp}}
        .dump();
}

BackTranslationRecord parse(const std::string& line) {
    try {
        const json j = json::parse(line);
        BackTranslationRecord record;
        record.original = sentence_from_json(j.at("original"));
        record.pivot = sentence_from_json(j.at("pivot"));
        record.back_translation = sentence_from_json(j.at("back_translation"));
        record.engine_id = j.value("engine_id", "");
        record.pass_count = j.value("pass_count", -1);
        record.timestamp = j.value("timestamp", "");
        return record;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed back-translation record: ") + e.what());
    }
}

}  // namespace btdetect::records
