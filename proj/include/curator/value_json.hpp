#pragma once

#include <json.hpp>

#include "curator/value.hpp"

namespace curator {

// Canonical JSON mapping: Null->null, Bool->bool, Int->integer, Float->number,
// Text->string, List->array, Record->object (field order kept via an extra
// "__order" array only when it is not lexicographic). Tables serialize as
// {"schema":[{"name","type"}...], "rows":[...]}.
nlohmann::ordered_json value_to_json(const Value& v);
Value value_from_json(const nlohmann::ordered_json& j);

std::string value_to_json_text(const Value& v);
Value value_from_json_text(const std::string& text);

nlohmann::ordered_json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::ordered_json& j);

}  // namespace curator
