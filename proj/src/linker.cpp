#include <kgqa/linker.hpp>
#include <kgqa/text.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "adapter_util.hpp"

namespace kgqa {

namespace {

size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    const size_t m = a.size(), n = b.size();
    std::vector<size_t> prev(n + 1), cur(n + 1);
    for (size_t j = 0; j <= n; ++j) prev[j] = j;
    for (size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= n; ++j) {
            const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

std::vector<Mention> recognize_entities(const mrdcpq::Decomposition& d,
                                        const std::map<std::string, Iri>& gazetteer) {
    std::vector<Mention> out;
    for (const auto& step : d.steps) {
        const auto* anchor = std::get_if<mrdcpq::AnchorStep>(&step.kind);
        if (!anchor) continue;
        auto decoded = text::decode_utf8(anchor->text);
        if (!decoded) continue;
        const std::u32string payload = text::nfc(*decoded);
        const std::u32string folded = text::fold(std::u32string_view(payload));

        size_t best_begin = 0, best_len = 0;
        std::string best_label;
        for (const auto& [label, iri] : gazetteer) {
            auto label_cps = text::decode_lossy(label);
            for (size_t pos : text::find_word_bounded(folded, label_cps)) {
                const bool better =
                    label_cps.size() > best_len ||
                    (label_cps.size() == best_len &&
                     (best_label.empty() || pos < best_begin ||
                      (pos == best_begin && label < best_label)));
                if (better) {
                    best_begin = pos;
                    best_len = label_cps.size();
                    best_label = label;
                }
            }
        }
        if (best_len == 0) continue;
        Mention m;
        m.text = text::encode_utf8(payload.substr(best_begin, best_len));
        m.step_index = step.index;
        m.begin = best_begin;
        m.end = best_begin + best_len;
        out.push_back(std::move(m));
    }
    return out;
}

double string_similarity(std::string_view a, std::string_view b) {
    const std::u32string fa = text::decode_lossy(text::fold(a));
    const std::u32string fb = text::decode_lossy(text::fold(b));
    const size_t longest = std::max(fa.size(), fb.size());
    if (longest == 0) return 1.0; // both empty: identical
    const size_t dist = levenshtein(fa, fb);
    return 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
}

std::vector<Candidate> generate_candidates(const Mention& m, const KnowledgeGraph& kg,
                                           int k) {
    if (k < 1) throw Error("candidate count must be >= 1");
    const auto entities = kg.labeled_entities();
    if (entities.empty()) throw NoCandidates("knowledge graph has no labeled entities");

    std::vector<Candidate> scored;
    scored.reserve(entities.size());
    for (const auto& e : entities) {
        double best = 0.0;
        for (const auto& label : kg.labels_of(e))
            best = std::max(best, string_similarity(m.text, label));
        scored.push_back({e, best, std::nullopt});
    }
    std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
        if (a.string_score != b.string_score) return a.string_score > b.string_score;
        return a.entity < b.entity;
    });
    if (scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
    return scored;
}

EmbeddingVector embed(std::string_view s, int dim) {
    EmbeddingVector v;
    v.components.assign(static_cast<size_t>(dim), 0.0);
    const std::u32string folded = text::decode_lossy(text::fold(s));
    if (folded.empty()) return v;

    auto bump = [&](std::u32string_view gram) {
        const std::string bytes = text::encode_utf8(gram);
        v.components[fnv1a64(bytes) % static_cast<uint64_t>(dim)] += 1.0;
    };
    if (folded.size() < 3) {
        bump(folded);
    } else {
        for (size_t i = 0; i + 3 <= folded.size(); ++i)
            bump(std::u32string_view(folded).substr(i, 3));
    }
    double norm = 0.0;
    for (double c : v.components) norm += c * c;
    norm = std::sqrt(norm);
    for (double& c : v.components) c /= norm;
    return v;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.components.size() != v.components.size())
        throw DimensionMismatch("embedding dimensions differ: " +
                                std::to_string(u.components.size()) + " vs " +
                                std::to_string(v.components.size()));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.components.size(); ++i) {
        dot += u.components[i] * v.components[i];
        nu += u.components[i] * u.components[i];
        nv += v.components[i] * v.components[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

EmbeddingVector HttpEmbedder::embed_text(std::string_view s) {
    nlohmann::json request{{"text", std::string(s)}};
    nlohmann::json response = detail::adapter_call(spec_, request);
    if (!response.is_object() || !response.contains("vector") ||
        !response["vector"].is_array())
        throw AdapterProtocolError("embedder response must carry a vector array");
    EmbeddingVector v;
    for (const auto& c : response["vector"]) {
        if (!c.is_number()) throw AdapterProtocolError("vector entries must be numbers");
        v.components.push_back(c.get<double>());
    }
    return v;
}

LinkResult rerank(const std::string& question, std::vector<Candidate> candidates,
                  const KnowledgeGraph& kg, Embedder* embedder) {
    if (candidates.empty()) throw NoCandidates("rerank requires at least one candidate");
    ReferenceEmbedder reference;
    Embedder& enc = embedder ? *embedder : reference;

    const EmbeddingVector question_vec = enc.embed_text(question);
    for (auto& c : candidates) {
        std::string doc;
        if (auto abs = kg.abstract_of(c.entity)) {
            doc = *abs;
        } else {
            const auto& labels = kg.labels_of(c.entity);
            if (!labels.empty()) doc = *labels.begin();
        }
        c.dense_score = cosine(question_vec, enc.embed_text(doc));
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (*a.dense_score != *b.dense_score) return *a.dense_score > *b.dense_score;
        if (a.string_score != b.string_score) return a.string_score > b.string_score;
        return a.entity < b.entity;
    });

    LinkResult result;
    result.ranked = std::move(candidates);
    result.chosen = result.ranked.front().entity;
    return result;
}

} // namespace kgqa
