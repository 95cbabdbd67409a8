#include "locaudit/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "locaudit/error.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

std::size_t char_edit_distance(std::string_view a, std::string_view b) {
    const auto ca = text::decode_utf8(a);
    const auto cb = text::decode_utf8(b);
    return edit_distance<char32_t>(ca, cb);
}

std::size_t token_edit_distance(std::string_view a, std::string_view b) {
    const auto ta = text::split_whitespace(a);
    const auto tb = text::split_whitespace(b);
    return edit_distance<std::string>(ta, tb);
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

namespace {

std::string joint_text(const TaskRecord& r) { return text::collapse_whitespace(r.query + "\n" + r.answer); }

double normalized(std::size_t distance, std::size_t a, std::size_t b) {
    const auto denom = std::max(a, b);
    return denom == 0 ? 0.0 : 100.0 * static_cast<double>(distance) / static_cast<double>(denom);
}

using PairKey = std::pair<std::string, std::string>;  // (language, source_task_id)

std::map<PairKey, const TaskRecord*> index_by_source(const Dataset& d, const char* which) {
    std::map<PairKey, const TaskRecord*> out;
    for (const auto& r : d.records) {
        if (!out.emplace(PairKey{r.language, r.source_task_id}, &r).second) {
            throw PairingError(r.source_task_id, std::string("duplicate source_task_id ") + r.source_task_id +
                                                     " (" + r.language + ") in " + which + " dataset");
        }
    }
    return out;
}

std::string fixed1(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v;
    return out.str();
}

}  // namespace

std::vector<EditRateReport> edit_rates(const Dataset& mt, const Dataset& audited) {
    const auto mt_index = index_by_source(mt, "mt");
    const auto au_index = index_by_source(audited, "audited");
    for (const auto& [key, r] : au_index) {
        if (!mt_index.count(key)) {
            throw PairingError(key.second, "audited task " + r->task_id + " (" + key.first + ") has no mt counterpart");
        }
    }

    struct Acc {
        std::size_t tasks = 0, edited = 0;
        double word = 0.0, chars = 0.0;
    };
    std::map<std::string, Acc> per_language;
    for (const auto& [key, m] : mt_index) {
        auto it = au_index.find(key);
        if (it == au_index.end()) {
            throw PairingError(key.second, "mt task " + m->task_id + " (" + key.first + ") has no audited counterpart");
        }
        const auto a_text = joint_text(*m);
        const auto b_text = joint_text(*it->second);
        auto& acc = per_language[key.first];
        ++acc.tasks;
        if (a_text != b_text) ++acc.edited;

        const auto ta = text::split_whitespace(a_text);
        const auto tb = text::split_whitespace(b_text);
        acc.word += normalized(edit_distance<std::string>(ta, tb), ta.size(), tb.size());
        const auto ca = text::decode_utf8(a_text);
        const auto cb = text::decode_utf8(b_text);
        acc.chars += normalized(edit_distance<char32_t>(ca, cb), ca.size(), cb.size());
    }

    std::vector<EditRateReport> out;
    for (const auto& [lang, acc] : per_language) {
        const double n = static_cast<double>(acc.tasks);
        out.push_back(EditRateReport{lang, round1(100.0 * static_cast<double>(acc.edited) / n),
                                     round1(acc.word / n), round1(acc.chars / n), acc.tasks});
    }
    return out;
}

std::map<IssueCategory, double> flag_rates(const std::vector<ReviewDecision>& decisions) {
    if (decisions.empty()) throw ValidationError("flag rates need at least one review decision");
    std::map<IssueCategory, double> out;
    for (auto c : kIssueCategories) {
        std::size_t flagged = 0;
        for (const auto& d : decisions) {
            auto it = d.flags.find(c);
            if (it != d.flags.end() && it->second) ++flagged;
        }
        out[c] = 100.0 * static_cast<double>(flagged) / static_cast<double>(decisions.size());
    }
    return out;
}

FlipReport flip_rates(const std::vector<ReviewDecision>& decisions, const std::vector<EvalOutcome>& mt_outcomes,
                      const std::vector<EvalOutcome>& audited_outcomes) {
    using Key = std::pair<std::string, std::string>;
    std::set<std::string> models;
    auto index = [&](const std::vector<EvalOutcome>& outcomes) {
        std::map<Key, const EvalOutcome*> out;
        for (const auto& o : outcomes) {
            out[{o.language, o.task_id}] = &o;
            models.insert(o.model_id);
        }
        return out;
    };
    const auto mt = index(mt_outcomes);
    const auto au = index(audited_outcomes);
    if (models.size() > 1) throw ValidationError("flip analysis needs outcomes from a single model");

    FlipReport report;
    report.n_tasks = decisions.size();
    report.model_id = models.empty() ? "" : *models.begin();
    const auto rates = decisions.empty() ? std::map<IssueCategory, double>{} : flag_rates(decisions);
    for (auto c : kIssueCategories) {
        auto& cat = report.categories[c];
        cat.flag_rate = rates.count(c) ? rates.at(c) : 0.0;
        for (const auto& d : decisions) {
            auto it = d.flags.find(c);
            if (it == d.flags.end() || !it->second) continue;
            const Key key{d.language, d.task_id};
            auto m = mt.find(key);
            auto a = au.find(key);
            if (m == mt.end() || a == au.end()) {
                throw NotFoundError("missing " + std::string(m == mt.end() ? "mt" : "audited") + " outcome for task " +
                                    d.task_id + " (" + d.language + ")");
            }
            ++cat.n_flagged;
            if (m->second->correct != a->second->correct) ++cat.n_flipped;
        }
        if (cat.n_flagged > 0) {
            cat.flip_rate = 100.0 * static_cast<double>(cat.n_flipped) / static_cast<double>(cat.n_flagged);
        }
    }
    return report;
}

std::string render_edit_rates(const std::vector<EditRateReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "Language" << std::right << std::setw(8) << "Task" << std::setw(8) << "Word"
        << std::setw(8) << "Char" << std::setw(8) << "Tasks" << "\n";
    for (const auto& r : reports) {
        out << std::left << std::setw(10) << r.language << std::right << std::setw(8) << fixed1(r.task_rate)
            << std::setw(8) << fixed1(r.word_rate) << std::setw(8) << fixed1(r.char_rate) << std::setw(8)
            << r.n_tasks << "\n";
    }
    out << "\nNote: " << kEditRateFootnote << "\n";
    return out.str();
}

nlohmann::ordered_json to_json(const EditRateReport& r) {
    nlohmann::ordered_json j;
    j["language"] = r.language;
    j["Task"] = r.task_rate;
    j["Word"] = r.word_rate;
    j["Char"] = r.char_rate;
    j["n_tasks"] = r.n_tasks;
    return j;
}

std::string render_flag_rates(const std::map<IssueCategory, double>& rates, std::size_t n_decisions) {
    std::ostringstream out;
    out << std::left << std::setw(26) << "Category" << std::right << std::setw(10) << "Flagged %" << "\n";
    for (auto c : kIssueCategories) {
        out << std::left << std::setw(26) << to_string(c) << std::right << std::setw(10) << fixed1(rates.at(c))
            << "\n";
    }
    out << "\n" << n_decisions << " review decisions, aggregated across languages\n";
    return out.str();
}

std::string render_flip_report(const FlipReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(26) << "Category" << std::right << std::setw(10) << "Flagged %" << std::setw(10)
        << "Flip %" << std::setw(10) << "Flagged" << std::setw(10) << "Flipped" << "\n";
    for (auto c : kIssueCategories) {
        const auto& cat = report.categories.at(c);
        out << std::left << std::setw(26) << to_string(c) << std::right << std::setw(10) << fixed1(cat.flag_rate)
            << std::setw(10) << (cat.flip_rate ? fixed1(*cat.flip_rate) : std::string("-")) << std::setw(10)
            << cat.n_flagged << std::setw(10) << cat.n_flipped << "\n";
    }
    out << "\n" << report.n_tasks << " tasks, model " << report.model_id
        << ". Co-occurring flags count a task in every flagged category, so flips are correlational.\n";
    return out.str();
}

nlohmann::ordered_json to_json(const FlipReport& r) {
    nlohmann::ordered_json j;
    j["model_id"] = r.model_id;
    j["n_tasks"] = r.n_tasks;
    auto cats = nlohmann::ordered_json::object();
    for (auto c : kIssueCategories) {
        const auto& cat = r.categories.at(c);
        nlohmann::ordered_json e;
        e["flag_rate"] = cat.flag_rate;
        e["flip_rate"] = cat.flip_rate ? nlohmann::ordered_json(*cat.flip_rate) : nlohmann::ordered_json(nullptr);
        e["n_flagged"] = cat.n_flagged;
        e["n_flipped"] = cat.n_flipped;
        cats[std::string(to_string(c))] = std::move(e);
    }
    j["categories"] = std::move(cats);
    return j;
}

}  // namespace locaudit
