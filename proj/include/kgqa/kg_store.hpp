#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <kgqa/error.hpp>

namespace kgqa {

inline constexpr const char* kDefaultLabelPredicate =
    "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr const char* kDefaultAbstractPredicate = "http://kg/p/abstract";

/// An absolute IRI, stored without angle brackets and NFC-normalized.
struct Iri {
    std::string value;

    Iri() = default;
    explicit Iri(std::string v);

    auto operator<=>(const Iri&) const = default;
};

/// An RDF literal. lang and datatype are never both present.
struct Literal {
    std::string lexical;
    std::optional<std::string> lang;
    std::optional<Iri> datatype;

    static Literal plain(std::string lexical);
    static Literal with_lang(std::string lexical, std::string lang);
    static Literal typed(std::string lexical, Iri datatype);

    auto operator<=>(const Literal&) const = default;
};

/// Subjects and predicates are always Iri; Literal only appears as object.
using Node = std::variant<Iri, Literal>;

bool node_less(const Node& a, const Node& b); // total order, Iri < Literal
bool node_eq(const Node& a, const Node& b);
std::string node_string(const Node& n); // IRI value or literal lexical form

struct Triple {
    Iri subject;
    Iri predicate;
    Node object;

    bool operator==(const Triple& other) const;
};

bool spo_less(const Triple& a, const Triple& b);
bool pos_less(const Triple& a, const Triple& b);
bool osp_less(const Triple& a, const Triple& b);

struct MalformedLine : Error {
    size_t line;
    MalformedLine(size_t line, const std::string& reason);
};

/// Parses the N-Triples subset (one statement per line, `#` comment lines,
/// UTF-8). Parsing is all-or-nothing: the first bad line throws.
std::vector<Triple> parse_ntriples(std::string_view text);
std::string serialize_ntriples(const std::vector<Triple>& triples);

/// In-memory triple store with SPO/POS/OSP indexes plus label and abstract
/// lookups. Mutable only until freeze(); frozen graphs are safe to share
/// across threads.
class KnowledgeGraph {
public:
    KnowledgeGraph();
    KnowledgeGraph(Iri label_predicate, Iri abstract_predicate);

    void insert(Triple t); // idempotent; throws std::logic_error once frozen
    void freeze();
    bool frozen() const { return frozen_; }
    size_t size() const { return spo_.size(); }
    std::array<size_t, 3> index_sizes() const { return {spo_.size(), pos_.size(), osp_.size()}; }

    /// All triples agreeing with every bound position, in SPO order.
    std::vector<Triple> match_pattern(const std::optional<Iri>& s,
                                      const std::optional<Iri>& p,
                                      const std::optional<Node>& o) const;

    const std::set<std::string>& labels_of(const Iri& entity) const;
    std::optional<std::string> abstract_of(const Iri& entity) const;

    /// Labeled IRIs that never occur in predicate position, sorted.
    std::vector<Iri> labeled_entities() const;
    /// IRIs used in predicate position that carry at least one label, sorted.
    std::vector<Iri> labeled_predicates() const;

    const Iri& label_predicate() const { return label_predicate_; }
    const Iri& abstract_predicate() const { return abstract_predicate_; }

    /// Registers an IRI as occurring in predicate position without inserting
    /// a triple. Used when mirroring label/abstract data from a remote
    /// endpoint whose fact triples are not ingested locally.
    void register_predicate(const Iri& p);

    std::vector<Triple> all_triples() const; // SPO order

private:
    using SpoSet = std::set<Triple, bool (*)(const Triple&, const Triple&)>;

    SpoSet spo_;
    SpoSet pos_;
    SpoSet osp_;
    std::map<Iri, std::set<std::string>> label_index_;
    std::map<Iri, std::set<std::string>> abstract_index_;
    std::set<Iri> predicate_iris_;
    Iri label_predicate_;
    Iri abstract_predicate_;
    bool frozen_ = false;
};

/// Reads and parses an N-Triples file into a frozen graph.
KnowledgeGraph load_graph_file(const std::string& path,
                               Iri label_predicate = Iri(kDefaultLabelPredicate),
                               Iri abstract_predicate = Iri(kDefaultAbstractPredicate));

} // namespace kgqa
