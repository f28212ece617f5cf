#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Domain types shared by every stage of the memory-discrimination pipeline.
// All of them are immutable after construction and safe to share across
// concurrent workers.

namespace memsieve::core {

// A category of personal knowledge an application may ask to remember
// (an attribute, relation or event context, e.g. "allergy" or "travel_plan").
struct MemoryScene {
    std::string id;
    std::string name;
    std::string description;
    std::optional<std::string> category_hint;
};

// A device-recognized purpose of an interaction (e.g. "set_reminder").
struct Intent {
    std::string id;
    std::string name;
};

// One user-device interaction, pre-split into sentences by the producer.
// `label`: 1 = memorable, 0 = non-memorable, absent in production mode.
struct Interaction {
    std::string id;
    std::vector<std::string> sentences;
    std::optional<std::string> intent_id;
    std::optional<int> label;
    std::optional<std::string> timestamp;  // RFC3339, kept verbatim
};

enum class Stage { Gated, Judged };

std::string stage_name(Stage stage);
Stage stage_from_name(const std::string& name);

struct SentenceVerdict {
    std::size_t sentence_index = 0;
    int decision = 0;
    Stage stage = Stage::Gated;
    std::string evidence;
    std::vector<std::string> fired_rule_ids;
    std::vector<std::string> flags;  // e.g. "retryable", "parse_failure"
};

// Per-interaction output of the discrimination function: one entry per
// input sentence. stage == Gated implies decision 0 and no fired rules.
struct Verdict {
    std::string interaction_id;
    std::vector<SentenceVerdict> per_sentence;
};

struct Dataset {
    std::vector<Interaction> interactions;
    std::string scene_set_id;
};

struct DatasetStats {
    std::size_t total = 0;
    std::size_t memorable = 0;
    std::size_t non_memorable = 0;
    std::size_t unlabeled = 0;
};

// Line-delimited records: one object per line with keys
// id, sentences, intent (optional), label (optional 0/1), ts (optional).
// Errors carry the 1-based line number; duplicate ids are rejected.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& content, const std::string& source_name);
std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

DatasetStats dataset_stats(const Dataset& dataset);

// Scenes file: array of {id, name, description, category_hint?}.
std::vector<MemoryScene> load_scenes(const std::filesystem::path& path);
void save_scenes(const std::vector<MemoryScene>& scenes, const std::filesystem::path& path);

// Intents file: array of {id, name}.
std::vector<Intent> load_intents(const std::filesystem::path& path);
void save_intents(const std::vector<Intent>& intents, const std::filesystem::path& path);

// Verdicts file: one Verdict object per line.
std::vector<Verdict> load_verdicts(const std::filesystem::path& path);
std::string serialize_verdicts(const std::vector<Verdict>& verdicts);

}  // namespace memsieve::core
