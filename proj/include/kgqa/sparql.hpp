#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <kgqa/kg_store.hpp>

namespace kgqa::sparql {

inline constexpr const char* kXsdInteger =
    "http://www.w3.org/2001/XMLSchema#integer";

/// A query variable, stored without the leading '?'.
struct Var {
    std::string name;
    auto operator<=>(const Var&) const = default;
};

/// A term of a triple pattern: variable, IRI or literal.
using Term = std::variant<Var, Iri, Literal>;

bool term_eq(const Term& a, const Term& b);

/// One pattern of a basic graph pattern. Subject and predicate are never
/// literals.
struct TriplePattern {
    Term subject;
    Term predicate;
    Term object;
};

/// Projection of the form (COUNT([DISTINCT] ?v) AS ?alias).
struct CountSpec {
    Var counted;
    bool distinct = false;
    Var as;
};

/// The supported SELECT subset: plain or COUNT projection over one BGP.
struct SelectQuery {
    std::vector<Var> projection;   // empty iff count is set
    std::optional<CountSpec> count;
    bool distinct = false;
    std::vector<TriplePattern> where;
};

bool query_eq(const SelectQuery& a, const SelectQuery& b);

/// Solution table. Each row binds exactly the vars, in order.
struct ResultTable {
    std::vector<Var> vars;
    std::vector<std::vector<Node>> rows;

    bool operator==(const ResultTable& other) const;
};

struct SyntaxError : Error {
    size_t position;
    std::string expected;
    SyntaxError(size_t position, const std::string& expected);
};

struct UnsupportedFeature : Error {
    size_t position;
    std::string feature;
    UnsupportedFeature(size_t position, const std::string& feature);
};

struct MalformedResponse : Error {
    using Error::Error;
};

SelectQuery parse_select(std::string_view text);
std::string serialize_query(const SelectQuery& q);

/// Natural join of the per-pattern match sets, projected and deterministically
/// ordered (rows sort lexicographically over their bound values).
ResultTable evaluate(const KnowledgeGraph& kg, const SelectQuery& q);

/// SPARQL 1.1 results JSON (`head.vars` / `results.bindings`).
std::string serialize_results(const ResultTable& t);
ResultTable parse_results(std::string_view json); // throws MalformedResponse

} // namespace kgqa::sparql
