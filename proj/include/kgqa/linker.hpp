#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <kgqa/adapter.hpp>
#include <kgqa/kg_store.hpp>
#include <kgqa/mrdcpq.hpp>

namespace kgqa {

inline constexpr int kEmbeddingDim = 256;
inline constexpr int kDefaultCandidateCount = 5;

/// A recognized entity mention inside an Anchor step payload. Offsets are
/// codepoint positions in the NFC payload.
struct Mention {
    std::string text;
    int step_index = 0;
    size_t begin = 0;
    size_t end = 0;
};

/// A linking candidate. dense_score stays unset until reranking.
struct Candidate {
    Iri entity;
    double string_score = 0.0;
    std::optional<double> dense_score;
};

/// Candidates ranked dense-score first; `chosen` is the top entity.
struct LinkResult {
    Mention mention;
    std::vector<Candidate> ranked;
    Iri chosen;
};

/// L2-normalized bag of hashed character trigrams (zero only for empty text).
struct EmbeddingVector {
    std::vector<double> components;
};

struct NoCandidates : Error {
    using Error::Error;
};

/// An Anchor step for which no mention could be recognized or linked.
struct LinkingFailed : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

/// Gazetteer NER over Anchor steps: the longest label occurring in the
/// payload (case-folded, NFC) becomes the mention. Anchors without a match
/// yield nothing; linking reports the failure downstream.
std::vector<Mention> recognize_entities(const mrdcpq::Decomposition& d,
                                        const std::map<std::string, Iri>& gazetteer);

/// Seam for swapping the mention recognizer (e.g. a model behind an adapter).
class EntityRecognizer {
public:
    virtual ~EntityRecognizer() = default;
    virtual std::vector<Mention> recognize(const mrdcpq::Decomposition& d) = 0;
};

class GazetteerRecognizer final : public EntityRecognizer {
public:
    explicit GazetteerRecognizer(std::map<std::string, Iri> gazetteer)
        : gazetteer_(std::move(gazetteer)) {}
    std::vector<Mention> recognize(const mrdcpq::Decomposition& d) override {
        return recognize_entities(d, gazetteer_);
    }

private:
    std::map<std::string, Iri> gazetteer_;
};

/// 1 - levenshtein(a, b) / max(|a|, |b|) over case-folded NFC codepoints.
double string_similarity(std::string_view a, std::string_view b);

/// Top-k labeled entities by best-label string similarity; ties break toward
/// the lexicographically smaller IRI.
std::vector<Candidate> generate_candidates(const Mention& m, const KnowledgeGraph& kg,
                                           int k = kDefaultCandidateCount);

/// Reference embedder: FNV-1a 64-bit hash of each character trigram of the
/// folded text, bucketed mod dim, counts L2-normalized. Texts shorter than
/// three codepoints hash as a single whole-string gram so any non-empty text
/// embeds to a unit vector.
EmbeddingVector embed(std::string_view s, int dim = kEmbeddingDim);

double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Seam for plugging an external dense encoder behind the reference one.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed_text(std::string_view s) = 0;
};

class ReferenceEmbedder final : public Embedder {
public:
    explicit ReferenceEmbedder(int dim = kEmbeddingDim) : dim_(dim) {}
    EmbeddingVector embed_text(std::string_view s) override { return embed(s, dim_); }

private:
    int dim_;
};

/// HTTP adapter: POST {"text": ...} -> {"vector": [...]}.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(AdapterSpec spec) : spec_(std::move(spec)) {}
    EmbeddingVector embed_text(std::string_view s) override;

private:
    AdapterSpec spec_;
};

/// Dense rerank: each candidate scores cosine(embed(question), embed(abstract
/// or fallback label)); order is dense score, then string score, then IRI.
LinkResult rerank(const std::string& question, std::vector<Candidate> candidates,
                  const KnowledgeGraph& kg, Embedder* embedder = nullptr);

} // namespace kgqa
