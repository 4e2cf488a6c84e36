#pragma once

#include <string>

#include <json.hpp>

namespace obata {

/// 17 significant digits, '.' separator, no locale. Non-finite values print
/// as null in JSON and as inf / -inf / nan in CSV.
std::string format_number(double v);

/// Serializes with fixed number formatting so reports are byte-stable.
std::string dump_json(const nlohmann::json& j, int indent = 2);

}  // namespace obata
