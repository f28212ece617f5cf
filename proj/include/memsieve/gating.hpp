#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memsieve/core.hpp"
#include "memsieve/textnorm.hpp"

// Offline construction of the memory-scene-based identifier from salient
// words, and the online gate that filters sentences before any judge call.

namespace memsieve::gating {

// One role-played user profile used when asking a word provider for the
// vocabulary of a scene.
struct Persona {
    std::string age_bracket;
    std::string sex;
    std::string career;
    std::string personality;
};

// Stable fingerprint of a persona; names the fixture file for its word list.
std::string persona_hash(const Persona& persona);

// 3 age brackets x 2 sexes x 5 careers x 3 personalities = 90 personas.
std::vector<Persona> default_persona_grid();

inline constexpr std::size_t kDefaultMaxWordsPerScene = 500;

// Aho-Corasick automaton over the normalized surfaces. Scanning is a single
// pass, linear in text length plus emitted hits; per-word scans cannot reach
// the required throughput at 30k+ surfaces.
class MultiPatternMatcher {
public:
    struct Hit {
        std::uint32_t pattern;
        std::size_t begin;  // byte offsets in the scanned (normalized) text
        std::size_t end;
    };

    MultiPatternMatcher() = default;
    explicit MultiPatternMatcher(const std::vector<std::string>& patterns);

    std::size_t pattern_count() const { return pattern_lengths_.size(); }
    void scan(std::string_view text, std::vector<Hit>& hits) const;

private:
    std::int32_t edge_target(std::int32_t node, unsigned char c) const;

    std::vector<std::uint32_t> pattern_lengths_;
    // CSR edge lists per node, plus a dense table for the root.
    std::vector<std::int32_t> edge_start_;
    std::vector<unsigned char> edge_label_;
    std::vector<std::int32_t> edge_to_;
    std::vector<std::int32_t> fail_;
    std::vector<std::int32_t> pattern_at_;  // pattern ending at node, or -1
    std::vector<std::int32_t> out_link_;    // next suffix node with a pattern, or -1
    std::int32_t root_next_[256] = {};
};

struct SalientWordEntry {
    std::string surface;                 // stored normalized
    std::vector<std::string> scene_ids;  // sorted, unique
};

struct WordMatch {
    std::string surface;
    std::size_t begin;  // byte range in the original input text
    std::size_t end;
};

struct MatchResult {
    std::vector<WordMatch> matched_words;      // sorted by (begin, end, surface)
    std::vector<std::string> matched_scene_ids;  // sorted union over matched words
};

struct GateResult {
    bool pass = false;
    MatchResult result;
};

// The salient-word -> scene mapping compiled into one multi-pattern
// automaton. Immutable after build; concurrent matching needs no locking.
class Identifier {
public:
    Identifier() = default;

    const std::vector<SalientWordEntry>& entries() const { return entries_; }
    const std::vector<std::string>& scene_ids() const { return scenes_; }
    std::size_t scene_count() const { return scenes_.size(); }
    int version() const { return version_; }

    MatchResult match(std::string_view text) const;

    nlohmann::ordered_json to_json() const;
    static Identifier from_json(const nlohmann::json& doc);
    static Identifier load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    friend Identifier build_identifier(const std::vector<core::MemoryScene>&,
                                       const std::map<std::string, std::vector<std::string>>&);
    friend Identifier add_scene(const Identifier&, const core::MemoryScene&,
                                const std::vector<std::string>&);

private:
    void compile();

    std::vector<SalientWordEntry> entries_;  // sorted by surface
    std::vector<text::SurfaceTraits> traits_;
    std::vector<std::string> scenes_;  // insertion order
    int version_ = 1;
    std::shared_ptr<const MultiPatternMatcher> matcher_;
};

// Answers (scene, persona) -> word list. Implementations: a remote
// text-generation client and a canned fixture provider; tests use fixtures.
class WordProvider {
public:
    virtual ~WordProvider() = default;
    virtual std::vector<std::string> words_for(const core::MemoryScene& scene,
                                               const Persona& persona) = 0;
    virtual std::string name() const = 0;
};

// Reads <root>/<scene_id>/<persona_hash>.txt, one word per line.
class FixtureWordProvider final : public WordProvider {
public:
    explicit FixtureWordProvider(std::filesystem::path root);
    std::vector<std::string> words_for(const core::MemoryScene& scene,
                                       const Persona& persona) override;
    std::string name() const override { return "fixture"; }

    // Union over every persona file present for the scene, in filename order.
    std::vector<std::string> all_words_for_scene(const std::string& scene_id) const;
    std::vector<std::string> persona_files_for_scene(const std::string& scene_id) const;

private:
    std::filesystem::path root_;
};

// Prompt-template-driven HTTP client. Transport comes entirely from config;
// tests never construct one.
class RemoteWordProvider final : public WordProvider {
public:
    struct Config {
        std::string endpoint;     // e.g. http://host:port/v1/chat/completions
        std::string model;
        std::string auth_env;     // env var holding the bearer token
        int timeout_ms = 30000;
        std::size_t words_requested = 40;
    };
    explicit RemoteWordProvider(Config config) : config_(std::move(config)) {}
    std::vector<std::string> words_for(const core::MemoryScene& scene,
                                       const Persona& persona) override;
    std::string name() const override { return "remote"; }

    static std::string render_word_prompt(const core::MemoryScene& scene,
                                          const Persona& persona, std::size_t count);

private:
    Config config_;
};

struct SalientWords {
    std::vector<std::string> words;
    std::vector<std::string> warnings;
};

// Deduplicated, normalized union over all personas, capped at max_words.
// A failing persona is skipped with a warning; all failing is an error.
SalientWords generate_salient_words(const core::MemoryScene& scene,
                                    const std::vector<Persona>& personas,
                                    WordProvider& provider,
                                    std::size_t max_words = kDefaultMaxWordsPerScene);

// Merge per-scene word lists into one identifier; entries sharing a surface
// get their scene sets merged. Every scene must appear in the mapping.
Identifier build_identifier(const std::vector<core::MemoryScene>& scenes,
                            const std::map<std::string, std::vector<std::string>>& words_per_scene);

// Copy-on-write update for a new scene; the original identifier is unchanged.
Identifier add_scene(const Identifier& identifier, const core::MemoryScene& scene,
                     const std::vector<std::string>& words);

// Every occurrence of every identifier surface in the normalized text, with
// byte ranges mapped back into the original input.
MatchResult match_text(const Identifier& identifier, std::string_view text);

// pass == false declares the sentence non-memorable with no judge call.
GateResult gate(const Identifier& identifier, std::string_view sentence);

}  // namespace memsieve::gating
