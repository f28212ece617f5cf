#include "memsieve/core.hpp"

#include <unordered_set>

#include "memsieve/errors.hpp"
#include "memsieve/io.hpp"

namespace memsieve::core {

using io::ordered_json;
using json = io::json;

std::string stage_name(Stage stage) {
    return stage == Stage::Gated ? "gated" : "judged";
}

Stage stage_from_name(const std::string& name) {
    if (name == "gated") return Stage::Gated;
    if (name == "judged") return Stage::Judged;
    throw Error("unknown stage: " + name);
}

namespace {

Interaction parse_interaction(const json& rec, const std::string& where) {
    Interaction it;
    if (!rec.is_object()) throw Error(where + ": record is not an object");
    if (!rec.contains("id") || !rec["id"].is_string() || rec["id"].get<std::string>().empty()) {
        throw Error(where + ": missing or empty id");
    }
    it.id = rec["id"].get<std::string>();
    if (!rec.contains("sentences") || !rec["sentences"].is_array() || rec["sentences"].empty()) {
        throw Error(where + ": sentences must be a non-empty array");
    }
    for (const auto& s : rec["sentences"]) {
        if (!s.is_string()) throw Error(where + ": sentences must be strings");
        it.sentences.push_back(s.get<std::string>());
    }
    if (rec.contains("intent") && !rec["intent"].is_null()) {
        if (!rec["intent"].is_string()) throw Error(where + ": intent must be a string");
        it.intent_id = rec["intent"].get<std::string>();
    }
    if (rec.contains("label") && !rec["label"].is_null()) {
        if (!rec["label"].is_number_integer()) throw Error(where + ": label must be 0 or 1");
        int label = rec["label"].get<int>();
        if (label != 0 && label != 1) throw Error(where + ": label must be 0 or 1");
        it.label = label;
    }
    if (rec.contains("ts") && !rec["ts"].is_null()) {
        if (!rec["ts"].is_string()) throw Error(where + ": ts must be a string");
        it.timestamp = rec["ts"].get<std::string>();
    }
    return it;
}

ordered_json interaction_to_json(const Interaction& it) {
    ordered_json rec;
    rec["id"] = it.id;
    rec["sentences"] = it.sentences;
    if (it.intent_id) rec["intent"] = *it.intent_id;
    if (it.label) rec["label"] = *it.label;
    if (it.timestamp) rec["ts"] = *it.timestamp;
    return rec;
}

}  // namespace

Dataset parse_dataset(const std::string& content, const std::string& source_name) {
    Dataset dataset;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t eol = content.find('\n', pos);
        std::string_view line(content.data() + pos,
                              (eol == std::string::npos ? content.size() : eol) - pos);
        pos = (eol == std::string::npos) ? content.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::string where = source_name + ":" + std::to_string(line_no);
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw Error(where + ": malformed JSON line");
        Interaction it = parse_interaction(rec, where);
        if (!seen.insert(it.id).second) {
            throw Error(where + ": duplicate interaction id \"" + it.id + "\"");
        }
        dataset.interactions.push_back(std::move(it));
    }
    return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
    return parse_dataset(io::read_file(path), path.filename().string());
}

std::string serialize_dataset(const Dataset& dataset) {
    std::string out;
    for (const auto& it : dataset.interactions) {
        out += interaction_to_json(it).dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    io::atomic_write(path, serialize_dataset(dataset));
}

DatasetStats dataset_stats(const Dataset& dataset) {
    DatasetStats stats;
    stats.total = dataset.interactions.size();
    for (const auto& it : dataset.interactions) {
        if (!it.label) {
            ++stats.unlabeled;
        } else if (*it.label == 1) {
            ++stats.memorable;
        } else {
            ++stats.non_memorable;
        }
    }
    return stats;
}

namespace {

json document_array(const json& doc, const char* key) {
    if (doc.is_array()) return doc;
    if (doc.is_object() && doc.contains(key) && doc[key].is_array()) return doc[key];
    throw Error(std::string("expected an array (or {") + key + ": [...]})");
}

}  // namespace

std::vector<MemoryScene> load_scenes(const std::filesystem::path& path) {
    json doc = document_array(io::parse_json_file(path), "scenes");
    std::vector<MemoryScene> scenes;
    std::unordered_set<std::string> seen;
    for (const auto& rec : doc) {
        MemoryScene scene;
        scene.id = rec.at("id").get<std::string>();
        scene.name = rec.at("name").get<std::string>();
        scene.description = rec.value("description", std::string());
        if (rec.contains("category_hint") && rec["category_hint"].is_string()) {
            scene.category_hint = rec["category_hint"].get<std::string>();
        }
        if (scene.id.empty() || scene.name.empty()) {
            throw Error(path.string() + ": scene id and name must be non-empty");
        }
        if (!seen.insert(scene.id).second) {
            throw Error(path.string() + ": duplicate scene id \"" + scene.id + "\"");
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

void save_scenes(const std::vector<MemoryScene>& scenes, const std::filesystem::path& path) {
    ordered_json doc = ordered_json::array();
    for (const auto& s : scenes) {
        ordered_json rec;
        rec["id"] = s.id;
        rec["name"] = s.name;
        rec["description"] = s.description;
        if (s.category_hint) rec["category_hint"] = *s.category_hint;
        doc.push_back(std::move(rec));
    }
    io::write_json_file(path, doc);
}

std::vector<Intent> load_intents(const std::filesystem::path& path) {
    json doc = document_array(io::parse_json_file(path), "intents");
    std::vector<Intent> intents;
    std::unordered_set<std::string> seen;
    for (const auto& rec : doc) {
        Intent intent;
        intent.id = rec.at("id").get<std::string>();
        intent.name = rec.value("name", intent.id);
        if (intent.id.empty()) throw Error(path.string() + ": intent id must be non-empty");
        if (!seen.insert(intent.id).second) {
            throw Error(path.string() + ": duplicate intent id \"" + intent.id + "\"");
        }
        intents.push_back(std::move(intent));
    }
    return intents;
}

void save_intents(const std::vector<Intent>& intents, const std::filesystem::path& path) {
    ordered_json doc = ordered_json::array();
    for (const auto& i : intents) {
        ordered_json rec;
        rec["id"] = i.id;
        rec["name"] = i.name;
        doc.push_back(std::move(rec));
    }
    io::write_json_file(path, doc);
}

std::string serialize_verdicts(const std::vector<Verdict>& verdicts) {
    std::string out;
    for (const auto& v : verdicts) {
        ordered_json rec;
        rec["interaction_id"] = v.interaction_id;
        ordered_json entries = ordered_json::array();
        for (const auto& s : v.per_sentence) {
            ordered_json e;
            e["sentence_index"] = s.sentence_index;
            e["decision"] = s.decision;
            e["stage"] = stage_name(s.stage);
            e["evidence"] = s.evidence;
            e["fired_rule_ids"] = s.fired_rule_ids;
            if (!s.flags.empty()) e["flags"] = s.flags;
            entries.push_back(std::move(e));
        }
        rec["per_sentence"] = std::move(entries);
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::vector<Verdict> load_verdicts(const std::filesystem::path& path) {
    std::string content = io::read_file(path);
    std::vector<Verdict> verdicts;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t eol = content.find('\n', pos);
        std::string_view line(content.data() + pos,
                              (eol == std::string::npos ? content.size() : eol) - pos);
        pos = (eol == std::string::npos) ? content.size() + 1 : eol + 1;
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        std::string where = path.filename().string() + ":" + std::to_string(line_no);
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw Error(where + ": malformed JSON line");
        Verdict v;
        v.interaction_id = rec.at("interaction_id").get<std::string>();
        for (const auto& e : rec.at("per_sentence")) {
            SentenceVerdict s;
            s.sentence_index = e.at("sentence_index").get<std::size_t>();
            s.decision = e.at("decision").get<int>();
            s.stage = stage_from_name(e.at("stage").get<std::string>());
            s.evidence = e.value("evidence", std::string());
            if (e.contains("fired_rule_ids")) {
                s.fired_rule_ids = e["fired_rule_ids"].get<std::vector<std::string>>();
            }
            if (e.contains("flags")) {
                s.flags = e["flags"].get<std::vector<std::string>>();
            }
            v.per_sentence.push_back(std::move(s));
        }
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace memsieve::core
