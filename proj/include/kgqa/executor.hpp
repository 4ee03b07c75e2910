#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <kgqa/decomposer.hpp>
#include <kgqa/linker.hpp>
#include <kgqa/qgen.hpp>
#include <kgqa/remote.hpp>

namespace kgqa {

/// Where plan steps run: the local store or a SPARQL endpoint.
class QueryBackend {
public:
    virtual ~QueryBackend() = default;
    virtual sparql::ResultTable select(const sparql::SelectQuery& q) = 0;
    virtual std::string describe() const = 0;
};

class LocalBackend final : public QueryBackend {
public:
    explicit LocalBackend(std::shared_ptr<const KnowledgeGraph> kg) : kg_(std::move(kg)) {}
    sparql::ResultTable select(const sparql::SelectQuery& q) override {
        return sparql::evaluate(*kg_, q);
    }
    std::string describe() const override { return "local graph"; }

private:
    std::shared_ptr<const KnowledgeGraph> kg_;
};

class RemoteBackend final : public QueryBackend {
public:
    RemoteBackend(std::string endpoint, std::chrono::milliseconds timeout)
        : endpoint_(std::move(endpoint)), timeout_(timeout) {}
    sparql::ResultTable select(const sparql::SelectQuery& q) override {
        return sparql::remote_query(endpoint_, q, timeout_);
    }
    std::string describe() const override { return endpoint_; }

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

/// Deduplicated, lexicographically ordered values one plan step produced.
struct StepResult {
    int step_index = 0;
    std::vector<Node> values;
};

struct Answer {
    std::vector<Node> values;
    std::vector<std::string> display;
    std::vector<StepResult> trace;
    std::vector<std::string> notes; // e.g. empty intermediate steps
};

/// Runs the plan in step order, feeding each hop once per source value and
/// unioning the results; a terminal COUNT yields the cardinality of its
/// (deduplicated) source. A mid-chain step with zero bindings is noted, not
/// fatal. `label_graph` (when given) renders IRIs by their labels.
Answer execute_plan(QueryBackend& backend, const qgen::QueryPlan& plan,
                    const KnowledgeGraph* label_graph = nullptr);

/// IRIs render by their lexicographically first label (the IRI itself when
/// unlabeled); literals render verbatim. Output sorted.
std::vector<std::string> compose_answer(const std::vector<Node>& values,
                                        const KnowledgeGraph* kg);

/// A loaded backend plus the lexicons the reference components need. For a
/// remote endpoint the label/abstract/predicate catalog is mirrored up front
/// with three subset queries.
struct PipelineContext {
    std::shared_ptr<const KnowledgeGraph> catalog;
    std::unique_ptr<QueryBackend> backend;
    DecomposerConfig decomposer_cfg;

    static PipelineContext local(KnowledgeGraph kg);
    static PipelineContext remote(const std::string& endpoint,
                                  std::chrono::milliseconds timeout,
                                  Iri label_predicate = Iri(kDefaultLabelPredicate),
                                  Iri abstract_predicate = Iri(kDefaultAbstractPredicate));
};

/// Which implementation backs each pluggable stage; nullopt means the
/// deterministic reference implementation.
struct PipelineComponents {
    std::optional<AdapterSpec> decomposer_adapter;
    std::optional<AdapterSpec> embedder_adapter;
    std::optional<AdapterSpec> qgen_adapter;
    int candidates = kDefaultCandidateCount;
    double relation_threshold = qgen::kDefaultRelationThreshold;
};

struct StageError {
    std::string stage; // decompose | linking | qgen | execute
    std::string message;
};

/// Everything the pipeline did for one question, JSON-serializable.
struct PipelineReport {
    std::string question;
    std::string decomposition;
    std::vector<LinkResult> links;
    std::vector<std::string> queries; // per non-anchor step; "COUNT" for aggregates
    std::optional<std::string> joined_query;
    std::vector<StepResult> trace;
    std::vector<std::string> answers;
    std::vector<StageError> errors;

    nlohmann::json to_json() const;
};

struct AskResult {
    std::optional<Answer> answer; // nullopt when a stage failed
    PipelineReport report;

    bool ok() const { return answer.has_value(); }
};

/// The four-stage pipeline: decompose, recognize and link, compile, execute.
/// Stage failures are captured as structured errors in the report rather than
/// thrown.
AskResult answer_question(const std::string& question, PipelineContext& ctx,
                          const PipelineComponents& components);

} // namespace kgqa
