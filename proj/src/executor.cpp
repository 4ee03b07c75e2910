#include <kgqa/executor.hpp>
#include <kgqa/text.hpp>

#include <algorithm>
#include <map>

namespace kgqa {

namespace {

bool is_slot(const sparql::Term& t) {
    const auto* v = std::get_if<sparql::Var>(&t);
    return v && v->name == qgen::kSlotVarName;
}

bool has_slot(const sparql::SelectQuery& q) {
    for (const auto& p : q.where)
        for (const sparql::Term* t : {&p.subject, &p.predicate, &p.object})
            if (is_slot(*t)) return true;
    return false;
}

sparql::SelectQuery substitute_slot(sparql::SelectQuery q, const Iri& value) {
    for (auto& p : q.where) {
        if (is_slot(p.subject)) p.subject = value;
        if (is_slot(p.predicate)) p.predicate = value;
        if (is_slot(p.object)) p.object = value;
    }
    return q;
}

std::vector<Node> column_of(const sparql::ResultTable& t, const sparql::Var& v,
                            int step_index) {
    for (size_t i = 0; i < t.vars.size(); ++i) {
        if (t.vars[i] == v) {
            std::vector<Node> out;
            out.reserve(t.rows.size());
            for (const auto& row : t.rows) out.push_back(row[i]);
            return out;
        }
    }
    throw Error("step " + std::to_string(step_index) + ": backend result is missing ?" +
                v.name);
}

nlohmann::json node_json(const Node& n) {
    nlohmann::json cell;
    if (std::holds_alternative<Iri>(n)) {
        cell["type"] = "uri";
        cell["value"] = std::get<Iri>(n).value;
    } else {
        const auto& l = std::get<Literal>(n);
        cell["type"] = "literal";
        cell["value"] = l.lexical;
        if (l.lang) cell["xml:lang"] = *l.lang;
        if (l.datatype) cell["datatype"] = l.datatype->value;
    }
    return cell;
}

} // namespace

Answer execute_plan(QueryBackend& backend, const qgen::QueryPlan& plan,
                    const KnowledgeGraph* label_graph) {
    Answer answer;
    answer.trace.reserve(plan.steps.size());
    std::map<int, size_t> by_index; // step index -> position in trace

    for (const auto& step : plan.steps) {
        StepResult result;
        result.step_index = step.step_index;

        if (const auto* bind = std::get_if<qgen::AnchorBind>(&step.action)) {
            result.values = {Node(bind->entity)};
        } else if (const auto* hop = std::get_if<qgen::HopQuery>(&step.action)) {
            auto src = by_index.find(hop->source_step);
            if (src == by_index.end())
                throw Error("step " + std::to_string(step.step_index) +
                            " references missing step result #" +
                            std::to_string(hop->source_step));
            std::vector<Node> collected;
            auto run = [&](const sparql::SelectQuery& q) {
                sparql::ResultTable t;
                try {
                    t = backend.select(q);
                } catch (const Error& e) {
                    throw Error("step " + std::to_string(step.step_index) + " against " +
                                backend.describe() + ": " + e.what());
                }
                for (auto& value : column_of(t, hop->out_var, step.step_index))
                    collected.push_back(std::move(value));
            };
            if (has_slot(hop->query_template)) {
                for (const auto& value : answer.trace[src->second].values) {
                    const auto* iri = std::get_if<Iri>(&value);
                    if (!iri) continue; // literals cannot be traversed further
                    run(substitute_slot(hop->query_template, *iri));
                }
            } else {
                run(hop->query_template);
            }
            std::sort(collected.begin(), collected.end(), &node_less);
            collected.erase(std::unique(collected.begin(), collected.end(), &node_eq),
                            collected.end());
            result.values = std::move(collected);
        } else {
            const auto& count = std::get<qgen::CountStep>(step.action);
            auto src = by_index.find(count.source_step);
            if (src == by_index.end())
                throw Error("count step references missing step result #" +
                            std::to_string(count.source_step));
            result.values = {
                Node(Literal::typed(std::to_string(answer.trace[src->second].values.size()),
                                    Iri(sparql::kXsdInteger)))};
        }

        answer.trace.push_back(std::move(result));
        by_index[step.step_index] = answer.trace.size() - 1;

        const bool final_step = answer.trace.size() == plan.steps.size();
        if (!final_step && answer.trace.back().values.empty())
            answer.notes.push_back("step " + std::to_string(step.step_index) +
                                   " produced no bindings");
    }

    if (!answer.trace.empty()) answer.values = answer.trace.back().values;
    answer.display = compose_answer(answer.values, label_graph);
    return answer;
}

std::vector<std::string> compose_answer(const std::vector<Node>& values,
                                        const KnowledgeGraph* kg) {
    std::vector<std::string> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        if (const auto* iri = std::get_if<Iri>(&v)) {
            if (kg) {
                const auto& labels = kg->labels_of(*iri);
                if (!labels.empty()) {
                    out.push_back(*labels.begin());
                    continue;
                }
            }
            out.push_back(iri->value);
        } else {
            out.push_back(std::get<Literal>(v).lexical);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// End-to-end orchestration

PipelineContext PipelineContext::local(KnowledgeGraph kg) {
    PipelineContext ctx;
    if (!kg.frozen()) kg.freeze();
    ctx.catalog = std::make_shared<const KnowledgeGraph>(std::move(kg));
    ctx.backend = std::make_unique<LocalBackend>(ctx.catalog);
    ctx.decomposer_cfg = DecomposerConfig::from_kg(*ctx.catalog);
    return ctx;
}

PipelineContext PipelineContext::remote(const std::string& endpoint,
                                        std::chrono::milliseconds timeout,
                                        Iri label_predicate, Iri abstract_predicate) {
    using sparql::SelectQuery;
    using sparql::Var;

    KnowledgeGraph mirror(label_predicate, abstract_predicate);

    SelectQuery predicates;
    predicates.distinct = true;
    predicates.projection = {Var{"p"}};
    predicates.where.push_back({Var{"s"}, Var{"p"}, Var{"o"}});
    for (const auto& row : sparql::remote_query(endpoint, predicates, timeout).rows)
        if (const auto* iri = std::get_if<Iri>(&row[0])) mirror.register_predicate(*iri);

    auto mirror_pairs = [&](const Iri& predicate) {
        SelectQuery q;
        q.projection = {Var{"s"}, Var{"v"}};
        q.where.push_back({Var{"s"}, predicate, Var{"v"}});
        for (const auto& row : sparql::remote_query(endpoint, q, timeout).rows) {
            const auto* subject = std::get_if<Iri>(&row[0]);
            if (!subject) continue;
            mirror.insert(Triple{*subject, predicate, row[1]});
        }
    };
    mirror_pairs(mirror.label_predicate());
    mirror_pairs(mirror.abstract_predicate());
    mirror.freeze();

    PipelineContext ctx;
    ctx.catalog = std::make_shared<const KnowledgeGraph>(std::move(mirror));
    ctx.backend = std::make_unique<RemoteBackend>(endpoint, timeout);
    ctx.decomposer_cfg = DecomposerConfig::from_kg(*ctx.catalog);
    return ctx;
}

nlohmann::json PipelineReport::to_json() const {
    nlohmann::json j;
    j["question"] = question;
    j["decomposition"] = decomposition;
    j["links"] = nlohmann::json::array();
    for (const auto& link : links) {
        nlohmann::json l;
        l["step"] = link.mention.step_index;
        l["mention"] = link.mention.text;
        l["span"] = {link.mention.begin, link.mention.end};
        l["chosen"] = link.chosen.value;
        l["candidates"] = nlohmann::json::array();
        for (const auto& c : link.ranked) {
            nlohmann::json cj;
            cj["iri"] = c.entity.value;
            cj["string_score"] = c.string_score;
            if (c.dense_score) cj["dense_score"] = *c.dense_score;
            l["candidates"].push_back(std::move(cj));
        }
        j["links"].push_back(std::move(l));
    }
    j["queries"] = queries;
    if (joined_query) j["joined_query"] = *joined_query;
    j["trace"] = nlohmann::json::array();
    for (const auto& step : trace) {
        nlohmann::json t;
        t["step"] = step.step_index;
        t["values"] = nlohmann::json::array();
        for (const auto& v : step.values) t["values"].push_back(node_json(v));
        j["trace"].push_back(std::move(t));
    }
    j["answers"] = answers;
    j["errors"] = nlohmann::json::array();
    for (const auto& e : errors)
        j["errors"].push_back({{"stage", e.stage}, {"message", e.message}});
    return j;
}

AskResult answer_question(const std::string& question, PipelineContext& ctx,
                          const PipelineComponents& components) {
    AskResult result;
    result.report.question = question;

    // Stage 1: decomposition.
    mrdcpq::Decomposition d;
    try {
        d = components.decomposer_adapter
                ? decompose_external(question, *components.decomposer_adapter)
                : decompose(question, ctx.decomposer_cfg);
    } catch (const Error& e) {
        result.report.errors.push_back({"decompose", e.what()});
        return result;
    }
    result.report.decomposition = mrdcpq::serialize(d);

    // Stage 2: entity recognition and linking.
    std::vector<LinkResult> links;
    try {
        auto mentions = recognize_entities(d, ctx.decomposer_cfg.gazetteer);
        for (const auto& step : d.steps) {
            if (!std::holds_alternative<mrdcpq::AnchorStep>(step.kind)) continue;
            const Mention* mention = nullptr;
            for (const auto& m : mentions)
                if (m.step_index == step.index) mention = &m;
            if (!mention)
                throw LinkingFailed("no entity mention recognized in step " +
                                    std::to_string(step.index));
            auto candidates =
                generate_candidates(*mention, *ctx.catalog, components.candidates);
            std::unique_ptr<Embedder> http;
            if (components.embedder_adapter)
                http = std::make_unique<HttpEmbedder>(*components.embedder_adapter);
            LinkResult link = rerank(question, std::move(candidates), *ctx.catalog, http.get());
            link.mention = *mention;
            links.push_back(std::move(link));
        }
    } catch (const Error& e) {
        result.report.errors.push_back({"linking", e.what()});
        return result;
    }
    result.report.links = links;

    // Stage 3: query generation.
    qgen::QueryPlan plan;
    try {
        if (components.qgen_adapter) {
            plan = qgen::compile_external(d, links, *components.qgen_adapter);
        } else {
            plan = qgen::compile_chain(d, links, *ctx.catalog, components.relation_threshold);
            result.report.joined_query = sparql::serialize_query(qgen::compile_joined(
                d, links, *ctx.catalog, components.relation_threshold));
        }
    } catch (const Error& e) {
        result.report.errors.push_back({"qgen", e.what()});
        return result;
    }
    for (const auto& step : plan.steps) {
        if (const auto* hop = std::get_if<qgen::HopQuery>(&step.action))
            result.report.queries.push_back(sparql::serialize_query(hop->query_template));
        else if (std::holds_alternative<qgen::CountStep>(step.action))
            result.report.queries.push_back("COUNT");
    }

    // Stage 4: sequential execution and answer composition.
    try {
        Answer answer = execute_plan(*ctx.backend, plan, ctx.catalog.get());
        for (const auto& note : answer.notes)
            result.report.errors.push_back({"execute", note});
        result.report.trace = answer.trace;
        result.report.answers = answer.display;
        result.answer = std::move(answer);
    } catch (const Error& e) {
        result.report.errors.push_back({"execute", e.what()});
        return result;
    }
    return result;
}

} // namespace kgqa
