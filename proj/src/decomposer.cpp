#include <kgqa/decomposer.hpp>
#include <kgqa/text.hpp>

#include <algorithm>

#include "adapter_util.hpp"

namespace kgqa {

std::set<std::string> DecomposerConfig::default_aggregate_cues() {
    return {"how many", "number of"};
}

DecomposerConfig DecomposerConfig::from_kg(const KnowledgeGraph& kg) {
    DecomposerConfig cfg;
    for (const auto& entity : kg.labeled_entities())
        for (const auto& label : kg.labels_of(entity))
            cfg.gazetteer.emplace(text::match_key(label), entity);
    for (const auto& p : kg.labeled_predicates())
        for (const auto& label : kg.labels_of(p))
            cfg.relation_lexicon.insert(text::match_key(label));
    cfg.aggregate_cues = default_aggregate_cues();
    return cfg;
}

UnsegmentableRemainder::UnsegmentableRemainder(std::string rem)
    : Error("no relation phrase found in: " + rem), remainder(std::move(rem)) {}

namespace {

struct PhraseMatch {
    size_t begin = 0;
    size_t length = 0;
    std::string surface;
};

void blank_span(std::u32string& s, size_t begin, size_t length) {
    for (size_t i = begin; i < begin + length && i < s.size(); ++i) s[i] = U' ';
}

bool word_start(const std::u32string& s, size_t i) {
    return i < s.size() && text::is_word_char(s[i]) &&
           (i == 0 || !text::is_word_char(s[i - 1]));
}

bool matches_at(const std::u32string& hay, size_t pos, const std::u32string& needle) {
    if (pos + needle.size() > hay.size()) return false;
    if (hay.compare(pos, needle.size(), needle) != 0) return false;
    const size_t end = pos + needle.size();
    return end == hay.size() || !text::is_word_char(hay[end]) ||
           !text::is_word_char(needle.back());
}

std::string surface_slice(const std::u32string& original, size_t begin, size_t length) {
    return text::trim(text::encode_utf8(original.substr(begin, length)));
}

} // namespace

mrdcpq::Decomposition decompose(const std::string& question, const DecomposerConfig& cfg) {
    auto decoded = text::decode_utf8(question);
    if (!decoded) throw Error("question is not valid UTF-8");
    const std::u32string original = text::nfc(*decoded);
    std::u32string folded = text::fold(std::u32string_view(original));

    // Leading aggregate cue ("how many ...", "number of ...").
    bool count = false;
    {
        size_t first_word = 0;
        while (first_word < folded.size() && !text::is_word_char(folded[first_word]))
            ++first_word;
        std::u32string best_cue;
        for (const auto& cue : cfg.aggregate_cues) {
            auto cue_cps = text::decode_lossy(cue);
            if (matches_at(folded, first_word, cue_cps) && cue_cps.size() > best_cue.size())
                best_cue = cue_cps;
        }
        if (!best_cue.empty()) {
            count = true;
            blank_span(folded, first_word, best_cue.size());
        }
    }

    // Anchor: the longest gazetteer label occurring in the question; ties go
    // to the earliest position, then the lexicographically smaller label.
    size_t anchor_begin = 0, anchor_len = 0;
    std::string anchor_label;
    for (const auto& [label, iri] : cfg.gazetteer) {
        auto label_cps = text::decode_lossy(label);
        for (size_t pos : text::find_word_bounded(folded, label_cps)) {
            const bool better =
                label_cps.size() > anchor_len ||
                (label_cps.size() == anchor_len &&
                 (anchor_label.empty() || pos < anchor_begin ||
                  (pos == anchor_begin && label < anchor_label)));
            if (better) {
                anchor_begin = pos;
                anchor_len = label_cps.size();
                anchor_label = label;
            }
        }
    }
    if (anchor_len == 0) throw NoAnchorFound("no gazetteer label occurs in: " + question);
    const std::string anchor_surface = surface_slice(original, anchor_begin, anchor_len);
    blank_span(folded, anchor_begin, anchor_len);

    // Relation phrases: greedy longest match, scanning left to right.
    std::vector<PhraseMatch> matches;
    size_t i = 0;
    while (i < folded.size()) {
        if (!word_start(folded, i)) {
            ++i;
            continue;
        }
        size_t best_len = 0;
        for (const auto& phrase : cfg.relation_lexicon) {
            auto phrase_cps = text::decode_lossy(phrase);
            if (phrase_cps.size() > best_len && matches_at(folded, i, phrase_cps))
                best_len = phrase_cps.size();
        }
        if (best_len > 0) {
            matches.push_back({i, best_len, surface_slice(original, i, best_len)});
            i += best_len;
        } else {
            while (i < folded.size() && text::is_word_char(folded[i])) ++i;
        }
    }
    if (matches.empty())
        throw UnsegmentableRemainder(text::collapse_ws(text::encode_utf8(folded)));

    // The controlled grammar keeps the entity at the tail of the `of`-chain,
    // so the hop nearest the entity is the rightmost phrase: emit in reverse
    // text order, each chained off the previous step.
    mrdcpq::Decomposition d;
    d.steps.push_back({1, mrdcpq::AnchorStep{anchor_surface}});
    int index = 2;
    for (auto it = matches.rbegin(); it != matches.rend(); ++it, ++index)
        d.steps.push_back({index, mrdcpq::HopStep{it->surface, mrdcpq::StepRef{index - 1}}});
    if (count) {
        d.steps.push_back({index, mrdcpq::AggregateStep{mrdcpq::StepRef{index - 1}}});
    }
    if (auto violations = mrdcpq::validate(d); !violations.empty())
        throw Error("decomposer produced an invalid chain: " + violations.front().message);
    return d;
}

mrdcpq::Decomposition decompose_external(const std::string& question,
                                         const AdapterSpec& adapter) {
    nlohmann::json request{{"question", question}};
    nlohmann::json response = detail::adapter_call(adapter, request);
    if (!response.is_object() || !response.contains("steps") || !response["steps"].is_array())
        throw AdapterProtocolError("adapter response must carry a steps array");
    std::string joined;
    for (const auto& step : response["steps"]) {
        if (!step.is_string())
            throw AdapterProtocolError("steps entries must be strings");
        if (!joined.empty()) joined += " ; ";
        joined += step.get<std::string>();
    }
    mrdcpq::Decomposition d;
    try {
        d = mrdcpq::parse_decomposition(joined);
    } catch (const mrdcpq::FormatError& e) {
        throw AdapterProtocolError(std::string("adapter steps do not parse: ") + e.what());
    }
    if (auto violations = mrdcpq::validate(d); !violations.empty())
        throw AdapterProtocolError("adapter steps fail validation: " +
                                   violations.front().message);
    return d;
}

} // namespace kgqa
