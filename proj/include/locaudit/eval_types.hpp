#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "locaudit/task_model.hpp"

namespace locaudit {

struct EvalOutcome {
    std::string task_id;
    Variant variant = Variant::mt;
    std::string language;
    std::string model_id;
    std::string prediction;
    bool correct = false;
    std::optional<std::string> error;

    bool operator==(const EvalOutcome&) const = default;
};

nlohmann::ordered_json to_json(const EvalOutcome& o);
EvalOutcome outcome_from_json(const nlohmann::json& j);

}  // namespace locaudit
