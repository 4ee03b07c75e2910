#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include <kgqa/executor.hpp>
#include <kgqa/mrdcpq.hpp>

namespace kgqa::eval {

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptySplit : Error {
    using Error::Error;
};

struct PerQuestion {
    std::string id;
    double precision = 0.0; // percentages
    double recall = 0.0;
    bool exact = false;
    std::vector<std::string> predicted;
    std::vector<std::string> gold;
    std::string error; // first pipeline error, if any
};

/// All values are percentages in [0, 100]. f1 is the harmonic mean of the
/// aggregate precision and recall, not an average of per-record F1s.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> tda;
    std::optional<double> ner_accuracy;
    std::vector<PerQuestion> per_question;
};

double f1_from_aggregates(double precision, double recall);

/// Exact-match rate of canonical serializations, normalized (NFC, case fold,
/// whitespace collapse).
double tda(const std::vector<mrdcpq::Decomposition>& pred,
           const std::vector<mrdcpq::Decomposition>& gold);

/// Exact-set-match rate over per-record entity IRI sets.
double ner_accuracy(const std::vector<std::set<std::string>>& pred,
                    const std::vector<std::set<std::string>>& gold);

/// Per-record precision |p∩g|/|p| (empty pred scores 1 against empty gold,
/// 0 otherwise) and recall |p∩g|/|g|, macro-averaged; accuracy is the exact
/// answer-set match rate.
Metrics answer_metrics(const std::vector<std::set<std::string>>& pred,
                       const std::vector<std::set<std::string>>& gold);

struct EvalReport {
    Metrics metrics;
    size_t evaluated = 0;

    nlohmann::json to_json() const;
    std::string text_table() const; // Precision / Recall / F1 Score / Accuracy
};

/// Runs the pipeline over one dataset split and scores answers, decomposition
/// exact-match (TDA) and entity-set exact-match. Pipeline failures count as
/// empty predictions. `jobs` > 1 evaluates records concurrently; aggregation
/// stays record-ordered and deterministic.
EvalReport run_eval(const std::vector<mrdcpq::DatasetRecord>& records,
                    mrdcpq::Split split, PipelineContext& ctx,
                    const PipelineComponents& components, int jobs = 1);

} // namespace kgqa::eval
