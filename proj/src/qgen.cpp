#include <kgqa/qgen.hpp>
#include <kgqa/text.hpp>

#include <algorithm>

#include "adapter_util.hpp"

namespace kgqa::qgen {

UnresolvedRelation::UnresolvedRelation(std::string phrase_in, double best_score_in)
    : Error("cannot resolve relation phrase '" + phrase_in + "' (best score " +
            std::to_string(best_score_in) + ")"),
      phrase(std::move(phrase_in)),
      best_score(best_score_in) {}

MissingLink::MissingLink(int step_index)
    : Error("anchor step " + std::to_string(step_index) + " has no link result"),
      step_index(step_index) {}

Iri resolve_relation(std::string_view phrase, const KnowledgeGraph& kg, double threshold) {
    double best = -1.0;
    Iri best_iri;
    for (const auto& p : kg.labeled_predicates()) {
        double score = 0.0;
        for (const auto& label : kg.labels_of(p))
            score = std::max(score, string_similarity(phrase, label));
        if (score > best || (score == best && (best_iri.value.empty() || p < best_iri))) {
            best = score;
            best_iri = p;
        }
    }
    if (best < threshold || best_iri.value.empty())
        throw UnresolvedRelation(std::string(phrase), std::max(best, 0.0));
    return best_iri;
}

namespace {

sparql::Var hop_var(int step_index) {
    return sparql::Var{"x" + std::to_string(step_index)};
}

struct ChainShape {
    int anchor_index = 0;
    const Iri* anchor_entity = nullptr;
};

// Shared shape checks for both compilers: one anchor, linked, aggregates only
// in final position and never directly over the anchor.
ChainShape check_shape(const mrdcpq::Decomposition& d,
                       const std::vector<LinkResult>& links) {
    if (auto violations = mrdcpq::validate(d); !violations.empty())
        throw UnsupportedShape("decomposition is invalid: " + violations.front().message);

    ChainShape shape;
    int anchors = 0;
    for (const auto& step : d.steps) {
        if (std::holds_alternative<mrdcpq::AnchorStep>(step.kind)) {
            ++anchors;
            shape.anchor_index = step.index;
        }
        if (const auto* agg = std::get_if<mrdcpq::AggregateStep>(&step.kind)) {
            if (step.index != static_cast<int>(d.steps.size()))
                throw UnsupportedShape("COUNT is only supported as the final step");
            (void)agg;
        }
    }
    if (anchors != 1)
        throw UnsupportedShape("only single-anchor decompositions compile (found " +
                               std::to_string(anchors) + " anchors)");
    if (const auto* agg = std::get_if<mrdcpq::AggregateStep>(&d.steps.back().kind)) {
        if (agg->ref.index == shape.anchor_index)
            throw UnsupportedShape("COUNT directly over the anchor step is not supported");
    }
    for (const auto& link : links) {
        if (link.mention.step_index == shape.anchor_index) {
            shape.anchor_entity = &link.chosen;
            break;
        }
    }
    if (!shape.anchor_entity) throw MissingLink(shape.anchor_index);
    return shape;
}

} // namespace

QueryPlan compile_chain(const mrdcpq::Decomposition& d, const std::vector<LinkResult>& links,
                        const KnowledgeGraph& kg, double threshold) {
    const ChainShape shape = check_shape(d, links);
    QueryPlan plan;
    for (const auto& step : d.steps) {
        PlanStep ps;
        ps.step_index = step.index;
        if (std::holds_alternative<mrdcpq::AnchorStep>(step.kind)) {
            ps.action = AnchorBind{*shape.anchor_entity};
        } else if (const auto* hop = std::get_if<mrdcpq::HopStep>(&step.kind)) {
            const Iri predicate = resolve_relation(hop->phrase, kg, threshold);
            HopQuery hq;
            hq.source_step = hop->ref.index;
            hq.out_var = hop_var(step.index);
            sparql::SelectQuery q;
            q.projection = {hq.out_var};
            q.where.push_back({sparql::Var{kSlotVarName}, predicate, hq.out_var});
            hq.query_template = std::move(q);
            ps.action = std::move(hq);
        } else {
            const auto& agg = std::get<mrdcpq::AggregateStep>(step.kind);
            ps.action = CountStep{agg.ref.index};
        }
        plan.steps.push_back(std::move(ps));
    }
    return plan;
}

sparql::SelectQuery compile_joined(const mrdcpq::Decomposition& d,
                                   const std::vector<LinkResult>& links,
                                   const KnowledgeGraph& kg, double threshold) {
    const ChainShape shape = check_shape(d, links);
    sparql::SelectQuery q;
    int final_value_step = 0;
    for (const auto& step : d.steps) {
        if (const auto* hop = std::get_if<mrdcpq::HopStep>(&step.kind)) {
            const Iri predicate = resolve_relation(hop->phrase, kg, threshold);
            sparql::Term subject;
            if (hop->ref.index == shape.anchor_index)
                subject = *shape.anchor_entity;
            else
                subject = hop_var(hop->ref.index);
            q.where.push_back({std::move(subject), predicate, hop_var(step.index)});
            final_value_step = step.index;
        }
    }
    if (const auto* agg = std::get_if<mrdcpq::AggregateStep>(&d.steps.back().kind)) {
        // The executor counts a deduplicated value set, so the joined form
        // counts DISTINCT.
        q.count = sparql::CountSpec{hop_var(agg->ref.index), true, sparql::Var{"n"}};
    } else {
        q.projection = {hop_var(final_value_step)};
    }
    return q;
}

QueryPlan compile_external(const mrdcpq::Decomposition& d,
                           const std::vector<LinkResult>& links,
                           const AdapterSpec& adapter) {
    nlohmann::json request;
    request["decomposition"] = mrdcpq::serialize(d);
    request["links"] = nlohmann::json::array();
    for (const auto& link : links)
        request["links"].push_back(
            {{"step", link.mention.step_index}, {"iri", link.chosen.value}});

    nlohmann::json response = detail::adapter_call(adapter, request);
    if (!response.is_object() || !response.contains("queries") ||
        !response["queries"].is_array())
        throw AdapterProtocolError("query generator response must carry a queries array");
    const auto& queries = response["queries"];

    std::vector<const mrdcpq::DecompStep*> non_anchor;
    for (const auto& step : d.steps)
        if (!std::holds_alternative<mrdcpq::AnchorStep>(step.kind))
            non_anchor.push_back(&step);
    if (queries.size() != non_anchor.size())
        throw AdapterProtocolError("expected " + std::to_string(non_anchor.size()) +
                                   " queries, got " + std::to_string(queries.size()));

    QueryPlan plan;
    for (const auto& step : d.steps) {
        if (std::holds_alternative<mrdcpq::AnchorStep>(step.kind)) {
            const LinkResult* link = nullptr;
            for (const auto& l : links)
                if (l.mention.step_index == step.index) link = &l;
            if (!link) throw MissingLink(step.index);
            plan.steps.push_back({step.index, AnchorBind{link->chosen}});
        }
    }
    size_t qi = 0;
    for (const auto* step : non_anchor) {
        if (!queries[qi].is_string())
            throw AdapterProtocolError("queries entries must be strings");
        const std::string qtext = queries[qi++].get<std::string>();
        if (const auto* agg = std::get_if<mrdcpq::AggregateStep>(&step->kind)) {
            if (text::trim(qtext) != "COUNT")
                throw AdapterProtocolError("aggregate step " + std::to_string(step->index) +
                                           " must be the keyword COUNT");
            plan.steps.push_back({step->index, CountStep{agg->ref.index}});
            continue;
        }
        const auto& hop = std::get<mrdcpq::HopStep>(step->kind);
        sparql::SelectQuery parsed;
        try {
            parsed = sparql::parse_select(qtext);
        } catch (const Error& e) {
            throw AdapterProtocolError("query for step " + std::to_string(step->index) +
                                       " does not parse: " + e.what());
        }
        if (parsed.count || parsed.projection.size() != 1 || parsed.where.size() != 1)
            throw AdapterProtocolError("hop queries must be single-pattern single-variable SELECTs");
        const auto& pattern = parsed.where.front();
        const auto* subject_var = std::get_if<sparql::Var>(&pattern.subject);
        if (subject_var && subject_var->name != kSlotVarName)
            throw AdapterProtocolError("hop query subjects must be ?__slot or an IRI");
        if (!subject_var && !std::holds_alternative<Iri>(pattern.subject))
            throw AdapterProtocolError("hop query subjects must be ?__slot or an IRI");
        if (!std::holds_alternative<Iri>(pattern.predicate))
            throw AdapterProtocolError("hop query predicates must be concrete IRIs");
        const auto* object_var = std::get_if<sparql::Var>(&pattern.object);
        if (!object_var || *object_var != parsed.projection.front() ||
            object_var->name == kSlotVarName)
            throw AdapterProtocolError("hop queries must project their object variable");
        HopQuery hq;
        hq.source_step = hop.ref.index;
        hq.out_var = parsed.projection.front();
        hq.query_template = std::move(parsed);
        plan.steps.push_back({step->index, std::move(hq)});
    }
    std::sort(plan.steps.begin(), plan.steps.end(),
              [](const PlanStep& a, const PlanStep& b) { return a.step_index < b.step_index; });
    return plan;
}

} // namespace kgqa::qgen
