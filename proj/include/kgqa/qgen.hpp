#pragma once

#include <string>
#include <variant>
#include <vector>

#include <kgqa/adapter.hpp>
#include <kgqa/linker.hpp>
#include <kgqa/mrdcpq.hpp>
#include <kgqa/sparql.hpp>

namespace kgqa::qgen {

/// Reserved variable standing in for the previous step's value inside a hop
/// query template; the executor substitutes it per source value.
inline constexpr const char* kSlotVarName = "__slot";

struct AnchorBind {
    Iri entity;
};

/// A hop step's single-pattern SELECT with the slot variable in subject
/// position and the hop's output variable projected.
struct HopQuery {
    sparql::SelectQuery query_template;
    int source_step = 0;
    sparql::Var out_var;
};

struct CountStep {
    int source_step = 0;
};

struct PlanStep {
    int step_index = 0;
    std::variant<AnchorBind, HopQuery, CountStep> action;
};

/// Ordered, parameterized plan mirroring the decomposition's step indexes.
struct QueryPlan {
    std::vector<PlanStep> steps;
};

struct UnresolvedRelation : Error {
    std::string phrase;
    double best_score;
    UnresolvedRelation(std::string phrase, double best_score);
};

struct UnsupportedShape : Error {
    using Error::Error;
};

struct MissingLink : Error {
    int step_index;
    explicit MissingLink(int step_index);
};

inline constexpr double kDefaultRelationThreshold = 0.5;

/// The labeled predicate most string-similar to the phrase, provided the
/// similarity reaches the threshold; ties break toward the smaller IRI.
Iri resolve_relation(std::string_view phrase, const KnowledgeGraph& kg,
                     double threshold = kDefaultRelationThreshold);

/// Compiles a linked single-anchor chain into a step-by-step plan. Aggregates
/// are only supported in final position (and not directly over the anchor,
/// which the joined form cannot express either).
QueryPlan compile_chain(const mrdcpq::Decomposition& d,
                        const std::vector<LinkResult>& links, const KnowledgeGraph& kg,
                        double threshold = kDefaultRelationThreshold);

/// The equivalent single joined SELECT: fresh variable per hop, anchor IRI in
/// the first subject, final variable (or COUNT of it) projected.
sparql::SelectQuery compile_joined(const mrdcpq::Decomposition& d,
                                   const std::vector<LinkResult>& links,
                                   const KnowledgeGraph& kg,
                                   double threshold = kDefaultRelationThreshold);

/// Delegates query generation to an external model: POST
/// {"decomposition": "...", "links": [{"step": n, "iri": "..."}]} ->
/// {"queries": [...]}, one entry per non-anchor step in order. Hop entries are
/// SELECT text using ?__slot (or an inline IRI) as subject; aggregate steps
/// are the keyword string "COUNT".
QueryPlan compile_external(const mrdcpq::Decomposition& d,
                           const std::vector<LinkResult>& links,
                           const AdapterSpec& adapter);

} // namespace kgqa::qgen
