#include "locaudit/task_model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <tuple>
#include <unordered_map>

#include "locaudit/error.hpp"

namespace locaudit {

namespace {

constexpr std::array<std::string_view, 8> kFieldOrder = {
    "task_id", "language", "variant", "level", "query", "answer", "file_name", "source_task_id",
};

// Some upstream exports use these names; they are accepted on ingest only.
const std::map<std::string, std::string, std::less<>> kCompatFields = {
    {"Question", "query"},
    {"Final answer", "answer"},
    {"Level", "level"},
};

std::string require_string(const nlohmann::json& j, const std::string& field) {
    if (!j.is_string()) throw ParseError(0, field, "expected a string");
    return j.get<std::string>();
}

int parse_level(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        try {
            std::size_t used = 0;
            int v = std::stoi(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw ParseError(0, "level", "expected an integer");
}

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::english: return "english";
        case Variant::mt: return "mt";
        case Variant::audited: return "audited";
    }
    return "english";
}

std::optional<Variant> parse_variant(std::string_view s) {
    if (s == "english") return Variant::english;
    if (s == "mt") return Variant::mt;
    if (s == "audited") return Variant::audited;
    return std::nullopt;
}

std::string_view to_string(IssueCategory c) {
    switch (c) {
        case IssueCategory::fluency: return "fluency";
        case IssueCategory::adequacy: return "adequacy";
        case IssueCategory::hallucination: return "hallucination";
        case IssueCategory::functional_alignment: return "functional_alignment";
        case IssueCategory::cultural_alignment: return "cultural_alignment";
        case IssueCategory::difficulty_calibration: return "difficulty_calibration";
    }
    return "fluency";
}

std::optional<IssueCategory> parse_issue_category(std::string_view s) {
    for (auto c : kIssueCategories) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

std::string primary_language(std::string_view tag) {
    std::string out;
    for (char ch : tag) {
        if (ch == '-' || ch == '_') break;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

bool is_valid_language_tag(std::string_view tag) {
    static const std::regex re("[a-zA-Z]{2,3}(-[a-zA-Z0-9]{2,8})*");
    return std::regex_match(tag.begin(), tag.end(), re);
}

void validate_record(const TaskRecord& r) {
    if (r.task_id.empty()) throw ValidationError("task_id must be non-empty");
    if (r.answer.empty()) throw ValidationError("task " + r.task_id + ": answer must be non-empty");
    if (!is_valid_language_tag(r.language)) {
        throw ValidationError("task " + r.task_id + ": invalid language tag \"" + r.language + "\"");
    }
    if (r.variant == Variant::english) {
        if (r.language != "en") {
            throw ValidationError("task " + r.task_id + ": english variant requires language en");
        }
        if (r.source_task_id != r.task_id) {
            throw ValidationError("task " + r.task_id + ": english variant must be its own source");
        }
    } else if (r.source_task_id.empty()) {
        throw ValidationError("task " + r.task_id + ": source_task_id must be non-empty");
    }
}

void validate_pair(const TaskPair& p) {
    if (p.source.variant != Variant::english) throw ValidationError("pair source must be the english variant");
    if (p.target.variant == Variant::english) throw ValidationError("pair target must not be the english variant");
    if (p.source.task_id != p.target.source_task_id) {
        throw ValidationError("pair mismatch: target " + p.target.task_id + " points at " +
                              p.target.source_task_id + ", source is " + p.source.task_id);
    }
}

nlohmann::ordered_json record_to_json(const TaskRecord& r) {
    nlohmann::ordered_json j;
    j["task_id"] = r.task_id;
    j["language"] = r.language;
    j["variant"] = to_string(r.variant);
    j["level"] = r.level;
    j["query"] = r.query;
    j["answer"] = r.answer;
    j["file_name"] = r.file_name;
    j["source_task_id"] = r.source_task_id;
    return j;
}

TaskRecord record_from_json(const nlohmann::json& raw) {
    if (!raw.is_object()) throw ParseError(0, "", "record must be a JSON object");

    std::map<std::string, const nlohmann::json*, std::less<>> fields;
    for (auto it = raw.begin(); it != raw.end(); ++it) {
        std::string name = it.key();
        if (auto compat = kCompatFields.find(name); compat != kCompatFields.end()) name = compat->second;
        if (std::find(kFieldOrder.begin(), kFieldOrder.end(), name) == kFieldOrder.end()) {
            throw ParseError(0, it.key(), "unknown field");
        }
        if (!fields.emplace(name, &it.value()).second) {
            throw ParseError(0, name, "field given twice (directly and via compatibility name)");
        }
    }
    auto get = [&](const std::string& name) -> const nlohmann::json& {
        auto it = fields.find(name);
        if (it == fields.end()) throw ParseError(0, name, "missing field");
        return *it->second;
    };

    TaskRecord r;
    r.task_id = require_string(get("task_id"), "task_id");
    r.language = require_string(get("language"), "language");
    const auto variant_tag = require_string(get("variant"), "variant");
    auto variant = parse_variant(variant_tag);
    if (!variant) throw ParseError(0, "variant", "bad variant tag \"" + variant_tag + "\"");
    r.variant = *variant;
    r.level = parse_level(get("level"));
    r.query = require_string(get("query"), "query");
    r.answer = require_string(get("answer"), "answer");
    if (fields.count("file_name")) r.file_name = require_string(get("file_name"), "file_name");
    if (fields.count("source_task_id")) {
        r.source_task_id = require_string(get("source_task_id"), "source_task_id");
    } else if (r.variant == Variant::english) {
        r.source_task_id = r.task_id;
    } else {
        throw ParseError(0, "source_task_id", "missing field");
    }

    try {
        validate_record(r);
    } catch (const ValidationError& e) {
        throw ParseError(0, "", e.what());
    }
    return r;
}

TaskRecord parse_record(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, "", std::string("invalid JSON: ") + e.what());
    }
    return record_from_json(j);
}

std::string serialize_record(const TaskRecord& r) { return record_to_json(r).dump(); }

Dataset parse_dataset(const std::vector<std::string>& lines) {
    Dataset d;
    std::set<std::tuple<std::string, Variant, std::string>> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        TaskRecord r;
        try {
            r = parse_record(line);
        } catch (const ParseError& e) {
            throw ParseError(i + 1, e.field(), std::string(e.what()));
        }
        if (!seen.emplace(r.task_id, r.variant, r.language).second) {
            throw ParseError(i + 1, "task_id",
                             "duplicate (task_id, variant, language) = (" + r.task_id + ", " +
                                 std::string(to_string(r.variant)) + ", " + r.language + ")");
        }
        d.records.push_back(std::move(r));
    }
    return d;
}

std::vector<std::string> serialize_dataset(const Dataset& d) {
    std::vector<std::string> out;
    out.reserve(d.records.size());
    for (const auto& r : d.records) out.push_back(serialize_record(r));
    return out;
}

Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    try {
        auto d = parse_dataset(lines);
        d.metadata.name = path;
        return d;
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.field(), path + ": " + e.what());
    }
}

void write_dataset_file(const std::string& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write dataset file " + path);
    for (const auto& line : serialize_dataset(d)) out << line << '\n';
}

std::vector<TaskPair> pair_variants(const Dataset& english, const Dataset& translated) {
    std::unordered_map<std::string, const TaskRecord*> by_id;
    for (const auto& r : english.records) {
        if (r.variant != Variant::english) {
            throw PairingError(r.task_id, "record " + r.task_id + " in english dataset is not the english variant");
        }
        if (!by_id.emplace(r.task_id, &r).second) {
            throw PairingError(r.task_id, "duplicate english task id " + r.task_id);
        }
    }
    std::vector<TaskPair> pairs;
    pairs.reserve(translated.records.size());
    for (const auto& t : translated.records) {
        if (t.variant == Variant::english) {
            throw PairingError(t.task_id, "record " + t.task_id + " in translated dataset is the english variant");
        }
        if (primary_language(t.language) == "en") {
            throw PairingError(t.task_id, "record " + t.task_id + " in translated dataset has language " + t.language);
        }
        auto it = by_id.find(t.source_task_id);
        if (it == by_id.end()) {
            throw PairingError(t.source_task_id, "unknown source_task_id " + t.source_task_id + " (task " +
                                                     t.task_id + ", " + t.language + ")");
        }
        pairs.push_back(TaskPair{*it->second, t});
    }
    return pairs;
}

}  // namespace locaudit
