#include "memsieve/gating.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <set>

#include "memsieve/errors.hpp"
#include "memsieve/io.hpp"

namespace memsieve::gating {

using io::ordered_json;
using json = io::json;

// ---------------------------------------------------------------------------
// Personas

std::string persona_hash(const Persona& persona) {
    std::string key = persona.age_bracket + "|" + persona.sex + "|" + persona.career +
                      "|" + persona.personality;
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<Persona> default_persona_grid() {
    static const char* ages[] = {"18-30", "31-50", "51-75"};
    static const char* sexes[] = {"female", "male"};
    static const char* careers[] = {"student", "engineer", "nurse", "retailer", "retiree"};
    static const char* personalities[] = {"organized", "spontaneous", "caring"};
    std::vector<Persona> grid;
    for (const char* a : ages)
        for (const char* s : sexes)
            for (const char* c : careers)
                for (const char* p : personalities)
                    grid.push_back({a, s, c, p});
    return grid;
}

// ---------------------------------------------------------------------------
// MultiPatternMatcher

namespace {

struct BuildNode {
    std::vector<std::pair<unsigned char, std::int32_t>> edges;
    std::int32_t pattern = -1;

    std::int32_t find(unsigned char c) const {
        for (const auto& [label, to] : edges)
            if (label == c) return to;
        return -1;
    }
};

}  // namespace

MultiPatternMatcher::MultiPatternMatcher(const std::vector<std::string>& patterns) {
    std::vector<BuildNode> nodes(1);
    pattern_lengths_.reserve(patterns.size());
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        const std::string& pat = patterns[p];
        if (pat.empty()) throw Error("empty pattern in matcher");
        pattern_lengths_.push_back(static_cast<std::uint32_t>(pat.size()));
        std::int32_t node = 0;
        for (unsigned char c : pat) {
            std::int32_t next = nodes[node].find(c);
            if (next < 0) {
                next = static_cast<std::int32_t>(nodes.size());
                nodes[node].edges.emplace_back(c, next);
                nodes.emplace_back();
            }
            node = next;
        }
        if (nodes[node].pattern >= 0) throw Error("duplicate pattern: " + pat);
        nodes[node].pattern = static_cast<std::int32_t>(p);
    }

    const std::size_t n = nodes.size();
    fail_.assign(n, 0);
    pattern_at_.assign(n, -1);
    out_link_.assign(n, -1);
    edge_start_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
        std::sort(nodes[v].edges.begin(), nodes[v].edges.end());
        edge_start_[v + 1] = edge_start_[v] + static_cast<std::int32_t>(nodes[v].edges.size());
        pattern_at_[v] = nodes[v].pattern;
    }
    edge_label_.resize(edge_start_[n]);
    edge_to_.resize(edge_start_[n]);
    for (std::size_t v = 0; v < n; ++v) {
        std::int32_t at = edge_start_[v];
        for (const auto& [label, to] : nodes[v].edges) {
            edge_label_[at] = label;
            edge_to_[at] = to;
            ++at;
        }
    }

    for (int c = 0; c < 256; ++c) root_next_[c] = 0;
    for (const auto& [label, to] : nodes[0].edges) root_next_[label] = to;

    // BFS failure links and dictionary-suffix links.
    std::deque<std::int32_t> queue;
    for (const auto& [label, to] : nodes[0].edges) queue.push_back(to);
    while (!queue.empty()) {
        std::int32_t v = queue.front();
        queue.pop_front();
        for (std::int32_t e = edge_start_[v]; e < edge_start_[v + 1]; ++e) {
            unsigned char c = edge_label_[e];
            std::int32_t u = edge_to_[e];
            std::int32_t f = fail_[v];
            while (true) {
                if (f == 0) {
                    fail_[u] = root_next_[c] == u ? 0 : root_next_[c];
                    break;
                }
                std::int32_t t = edge_target(f, c);
                if (t >= 0) {
                    fail_[u] = t;
                    break;
                }
                f = fail_[f];
            }
            out_link_[u] = pattern_at_[fail_[u]] >= 0 ? fail_[u] : out_link_[fail_[u]];
            queue.push_back(u);
        }
    }
}

std::int32_t MultiPatternMatcher::edge_target(std::int32_t node, unsigned char c) const {
    std::int32_t lo = edge_start_[node];
    std::int32_t hi = edge_start_[node + 1];
    while (lo < hi) {
        std::int32_t mid = (lo + hi) / 2;
        if (edge_label_[mid] < c) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return (lo < edge_start_[node + 1] && edge_label_[lo] == c) ? edge_to_[lo] : -1;
}

void MultiPatternMatcher::scan(std::string_view text, std::vector<Hit>& hits) const {
    if (pattern_lengths_.empty()) return;
    std::int32_t state = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        while (true) {
            if (state == 0) {
                state = root_next_[c];
                break;
            }
            std::int32_t t = edge_target(state, c);
            if (t >= 0) {
                state = t;
                break;
            }
            state = fail_[state];
        }
        std::int32_t o = pattern_at_[state] >= 0 ? state : out_link_[state];
        while (o >= 0) {
            std::uint32_t p = static_cast<std::uint32_t>(pattern_at_[o]);
            hits.push_back({p, i + 1 - pattern_lengths_[p], i + 1});
            o = out_link_[o];
        }
    }
}

// ---------------------------------------------------------------------------
// Identifier

void Identifier::compile() {
    std::vector<std::string> surfaces;
    surfaces.reserve(entries_.size());
    traits_.clear();
    traits_.reserve(entries_.size());
    for (const auto& e : entries_) {
        surfaces.push_back(e.surface);
        traits_.push_back(text::classify_surface(e.surface));
    }
    matcher_ = std::make_shared<const MultiPatternMatcher>(surfaces);
}

MatchResult Identifier::match(std::string_view input) const {
    MatchResult result;
    if (!matcher_ || entries_.empty() || input.empty()) return result;

    text::NormalizedText norm = text::normalize_with_map(input);
    std::vector<MultiPatternMatcher::Hit> hits;
    matcher_->scan(norm.text, hits);
    if (hits.empty()) return result;

    std::set<std::string> scenes;
    result.matched_words.reserve(hits.size());
    for (const auto& hit : hits) {
        if (!text::boundary_ok(traits_[hit.pattern], norm.text, hit.begin, hit.end)) continue;
        const auto& entry = entries_[hit.pattern];
        result.matched_words.push_back({entry.surface,
                                        norm.src_begin[hit.begin],
                                        norm.src_end[hit.end - 1]});
        scenes.insert(entry.scene_ids.begin(), entry.scene_ids.end());
    }
    std::sort(result.matched_words.begin(), result.matched_words.end(),
              [](const WordMatch& a, const WordMatch& b) {
                  return std::tie(a.begin, a.end, a.surface) < std::tie(b.begin, b.end, b.surface);
              });
    result.matched_scene_ids.assign(scenes.begin(), scenes.end());
    return result;
}

ordered_json Identifier::to_json() const {
    ordered_json doc;
    doc["version"] = version_;
    doc["scenes"] = scenes_;
    ordered_json entries = ordered_json::array();
    for (const auto& e : entries_) {
        ordered_json rec;
        rec["w"] = e.surface;
        rec["s"] = e.scene_ids;
        entries.push_back(std::move(rec));
    }
    doc["entries"] = std::move(entries);
    return doc;
}

Identifier Identifier::from_json(const json& doc) {
    Identifier id;
    id.version_ = doc.at("version").get<int>();
    id.scenes_ = doc.at("scenes").get<std::vector<std::string>>();
    std::set<std::string> known(id.scenes_.begin(), id.scenes_.end());
    for (const auto& rec : doc.at("entries")) {
        SalientWordEntry e;
        e.surface = rec.at("w").get<std::string>();
        e.scene_ids = rec.at("s").get<std::vector<std::string>>();
        if (e.surface.empty() || e.scene_ids.empty()) {
            throw Error("identifier entry with empty surface or scene set");
        }
        for (const auto& s : e.scene_ids) {
            if (!known.count(s)) throw Error("identifier entry references unknown scene " + s);
        }
        std::sort(e.scene_ids.begin(), e.scene_ids.end());
        id.entries_.push_back(std::move(e));
    }
    std::sort(id.entries_.begin(), id.entries_.end(),
              [](const SalientWordEntry& a, const SalientWordEntry& b) {
                  return a.surface < b.surface;
              });
    for (std::size_t i = 1; i < id.entries_.size(); ++i) {
        if (id.entries_[i].surface == id.entries_[i - 1].surface) {
            throw Error("identifier has duplicate surface " + id.entries_[i].surface);
        }
    }
    id.compile();
    return id;
}

Identifier Identifier::load(const std::filesystem::path& path) {
    return from_json(io::parse_json_file(path));
}

void Identifier::save(const std::filesystem::path& path) const {
    io::write_json_file(path, to_json());
}

// ---------------------------------------------------------------------------
// Providers

FixtureWordProvider::FixtureWordProvider(std::filesystem::path root) : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_)) {
        throw Error("fixture word directory not found: " + root_.string());
    }
}

namespace {

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
    std::string content = io::read_file(path);
    std::vector<std::string> words;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t eol = content.find('\n', pos);
        std::string line = content.substr(pos, (eol == std::string::npos ? content.size() : eol) - pos);
        pos = (eol == std::string::npos) ? content.size() + 1 : eol + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        words.push_back(line.substr(first));
    }
    return words;
}

}  // namespace

std::vector<std::string> FixtureWordProvider::words_for(const core::MemoryScene& scene,
                                                        const Persona& persona) {
    std::filesystem::path file = root_ / scene.id / (persona_hash(persona) + ".txt");
    if (!std::filesystem::exists(file)) {
        throw Error("no fixture word list: " + file.string());
    }
    return read_word_list(file);
}

std::vector<std::string> FixtureWordProvider::persona_files_for_scene(
    const std::string& scene_id) const {
    std::vector<std::string> files;
    std::filesystem::path dir = root_ / scene_id;
    if (!std::filesystem::is_directory(dir)) return files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::string> FixtureWordProvider::all_words_for_scene(
    const std::string& scene_id) const {
    std::vector<std::string> words;
    for (const auto& file : persona_files_for_scene(scene_id)) {
        auto list = read_word_list(file);
        words.insert(words.end(), list.begin(), list.end());
    }
    return words;
}

std::string RemoteWordProvider::render_word_prompt(const core::MemoryScene& scene,
                                                   const Persona& persona, std::size_t count) {
    std::string prompt;
    prompt += "You are a " + persona.age_bracket + " year old " + persona.sex + " " +
              persona.career + " with a " + persona.personality + " personality.\n";
    prompt += "List up to " + std::to_string(count) +
              " words or short phrases you would typically say to a voice assistant when "
              "talking about the following topic.\n";
    prompt += "Topic: " + scene.name + " - " + scene.description + "\n";
    prompt += "Reply with one word or phrase per line, nothing else.\n";
    return prompt;
}

SalientWords generate_salient_words(const core::MemoryScene& scene,
                                    const std::vector<Persona>& personas,
                                    WordProvider& provider, std::size_t max_words) {
    if (personas.empty()) throw Error("generate_salient_words: personas must be non-empty");
    SalientWords out;
    std::set<std::string> seen;
    std::size_t failures = 0;
    for (const auto& persona : personas) {
        std::vector<std::string> raw;
        try {
            raw = provider.words_for(scene, persona);
        } catch (const std::exception& e) {
            ++failures;
            out.warnings.push_back("scene " + scene.id + ": provider " + provider.name() +
                                   " failed for persona " + persona_hash(persona) + ": " +
                                   e.what());
            continue;
        }
        for (const auto& w : raw) {
            std::string surface = text::normalize(w);
            if (surface.empty()) continue;
            if (out.words.size() >= max_words) break;
            if (seen.insert(surface).second) out.words.push_back(std::move(surface));
        }
    }
    if (failures == personas.size()) {
        throw Error("generate_salient_words: provider failed for every persona of scene " +
                    scene.id);
    }
    if (out.words.empty()) {
        out.warnings.push_back("scene " + scene.id + " has no salient words");
    }
    return out;
}

namespace {

Identifier build_from_entry_map(std::map<std::string, std::set<std::string>>&& by_surface,
                                std::vector<std::string>&& scenes, int version) {
    Identifier id;
    for (auto& [surface, scene_set] : by_surface) {
        SalientWordEntry e;
        e.surface = surface;
        e.scene_ids.assign(scene_set.begin(), scene_set.end());
        id.entries_.push_back(std::move(e));
    }
    id.scenes_ = std::move(scenes);
    id.version_ = version;
    id.compile();
    return id;
}

}  // namespace

Identifier build_identifier(const std::vector<core::MemoryScene>& scenes,
                            const std::map<std::string, std::vector<std::string>>& words_per_scene) {
    std::vector<std::string> scene_ids;
    std::set<std::string> known;
    for (const auto& scene : scenes) {
        if (scene.id.empty()) throw Error("scene with empty id");
        if (!known.insert(scene.id).second) throw Error("duplicate scene id " + scene.id);
        scene_ids.push_back(scene.id);
    }
    for (const auto& [scene_id, words] : words_per_scene) {
        if (!known.count(scene_id)) {
            throw Error("words_per_scene references unknown scene " + scene_id);
        }
        (void)words;
    }
    std::map<std::string, std::set<std::string>> by_surface;
    for (const auto& scene : scenes) {
        auto it = words_per_scene.find(scene.id);
        if (it == words_per_scene.end()) continue;
        for (const auto& w : it->second) {
            std::string surface = text::normalize(w);
            if (surface.empty()) continue;
            by_surface[surface].insert(scene.id);
        }
    }
    return build_from_entry_map(std::move(by_surface), std::move(scene_ids), 1);
}

Identifier add_scene(const Identifier& identifier, const core::MemoryScene& scene,
                     const std::vector<std::string>& words) {
    for (const auto& existing : identifier.scenes_) {
        if (existing == scene.id) throw Error("scene already present: " + scene.id);
    }
    std::map<std::string, std::set<std::string>> by_surface;
    for (const auto& e : identifier.entries_) {
        by_surface[e.surface] = std::set<std::string>(e.scene_ids.begin(), e.scene_ids.end());
    }
    for (const auto& w : words) {
        std::string surface = text::normalize(w);
        if (surface.empty()) continue;
        by_surface[surface].insert(scene.id);
    }
    std::vector<std::string> scenes = identifier.scenes_;
    scenes.push_back(scene.id);
    return build_from_entry_map(std::move(by_surface), std::move(scenes),
                                identifier.version_ + 1);
}

MatchResult match_text(const Identifier& identifier, std::string_view text) {
    return identifier.match(text);
}

GateResult gate(const Identifier& identifier, std::string_view sentence) {
    GateResult out;
    out.result = identifier.match(sentence);
    out.pass = !out.result.matched_words.empty();
    return out;
}

}  // namespace memsieve::gating
