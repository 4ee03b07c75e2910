#pragma once

#include <map>
#include <set>
#include <string>

#include <kgqa/adapter.hpp>
#include <kgqa/kg_store.hpp>
#include <kgqa/mrdcpq.hpp>

namespace kgqa {

/// Lexicons driving the pattern-based reference decomposer. Keys are
/// match_key-normalized (NFC, case-folded, whitespace-collapsed).
struct DecomposerConfig {
    std::map<std::string, Iri> gazetteer;   // entity label -> entity
    std::set<std::string> relation_lexicon; // relation phrases
    std::set<std::string> aggregate_cues;   // leading phrases implying COUNT

    /// Entity labels and predicate labels pulled from a loaded graph, plus
    /// the default aggregate cues ("how many", "number of").
    static DecomposerConfig from_kg(const KnowledgeGraph& kg);

    static std::set<std::string> default_aggregate_cues();
};

struct NoAnchorFound : Error {
    using Error::Error;
};

struct UnsegmentableRemainder : Error {
    std::string remainder;
    explicit UnsegmentableRemainder(std::string remainder);
};

/// Pattern-based reference decomposition over the controlled question
/// grammar `<attr> of (<rel> of)* <entity>` / `how many <rel> ... <entity>`:
/// the longest gazetteer label becomes the anchor, relation phrases are
/// segmented by greedy longest match and chained innermost-first, and a
/// leading aggregate cue appends a terminal COUNT step. Filler tokens between
/// matches are ignored; a question in which no relation phrase can be found
/// is unsegmentable.
mrdcpq::Decomposition decompose(const std::string& question, const DecomposerConfig& cfg);

/// Delegates decomposition to an external model behind the adapter protocol:
/// request {"question": ...}, response {"steps": ["#1 ...", ...]}. The steps
/// are joined with " ; ", parsed and validated.
mrdcpq::Decomposition decompose_external(const std::string& question,
                                         const AdapterSpec& adapter);

} // namespace kgqa
