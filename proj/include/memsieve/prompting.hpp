#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memsieve/intent_clustering.hpp"

// Discrimination rules attached to intent clusters, prompt rendering for the
// judge, and parsing of the judge's two-step (evidence, verdict) output.

namespace memsieve::prompting {

enum class Polarity { Positive, Negative };

std::string polarity_name(Polarity polarity);
Polarity polarity_from_name(const std::string& name);

// Machine-checkable side of a rule, used only by the mock judge. A predicate
// fires when any keyword occurs in the sentence (identifier matching rules)
// or the regex matches the raw sentence.
struct RulePredicate {
    std::vector<std::string> keywords;
    std::optional<std::string> pattern;  // ECMAScript regex
};

struct DiscriminationRule {
    std::string id;
    Polarity polarity = Polarity::Positive;
    std::string text;
    std::optional<RulePredicate> predicate;
};

struct ClusterPrompt {
    std::string cluster_id;
    std::vector<std::string> member_intent_ids;
    std::vector<DiscriminationRule> rules;  // at least one positive
    std::string template_id = "memsieve.v1";
};

struct PromptSet {
    std::vector<ClusterPrompt> prompts;

    std::size_t total_rules() const;
    const ClusterPrompt* find_cluster(const std::string& cluster_id) const;
    // Intent -> prompt; intents belong to exactly one prompt across the set.
    const ClusterPrompt* find_intent(const std::string& intent_id) const;
};

// Evidence + verdict extracted from a judge reply.
struct Judgment {
    std::string evidence;
    std::vector<std::string> fired_rule_ids;
    int verdict = 0;
    std::string raw;
};

// One prompt per cluster; a cluster without a positive rule is an error.
PromptSet build_cluster_prompts(const clustering::IntentClustering& clusters,
                                const std::map<std::string, std::vector<DiscriminationRule>>& rules_by_cluster,
                                const std::string& template_id = "memsieve.v1");

// Explicit intent first, then the best candidate. Throws UnroutableError
// when neither routes; the caller falls back to decision 0.
const ClusterPrompt& select_prompt(const PromptSet& prompts,
                                   const std::optional<std::string>& intent_id,
                                   const std::vector<std::string>& candidates);

// Deterministic rendering: task instruction, numbered positive rules,
// numbered negative rules, the fenced sentence, and the required
// EVIDENCE/VERDICT output format.
std::string render_prompt(const ClusterPrompt& prompt, std::string_view sentence);

// Extracts the evidence block and the final VERDICT token (0 or 1).
// Rule ids are read from "rule <id>" mentions in the evidence.
// Throws JudgeParseError on a missing or malformed verdict.
Judgment parse_judgment(const std::string& raw);

// Machine evaluation of a rule predicate against a sentence (mock judge and
// test oracles). Rules without a predicate never fire.
bool rule_fires(const DiscriminationRule& rule, std::string_view sentence);

// The verdict contract: memorable iff at least one positive rule fires and
// no negative rule does.
int verdict_formula(const std::vector<DiscriminationRule>& rules, std::string_view sentence);

// Prompts file: {prompts:[{cluster_id, intents, rules:[...], template_id}]}.
PromptSet load_prompts(const std::filesystem::path& path);
nlohmann::ordered_json prompts_to_json(const PromptSet& prompts);
void save_prompts(const PromptSet& prompts, const std::filesystem::path& path);

}  // namespace memsieve::prompting
