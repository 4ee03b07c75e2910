#include <kgqa/eval.hpp>
#include <kgqa/text.hpp>

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <sstream>
#include <thread>

namespace kgqa::eval {

double f1_from_aggregates(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

namespace {

std::set<std::string> normalized(const std::vector<std::string>& values) {
    std::set<std::string> out;
    for (const auto& v : values) out.insert(text::match_key(v));
    return out;
}

size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    size_t n = 0;
    for (const auto& x : a)
        if (b.contains(x)) ++n;
    return n;
}

} // namespace

double tda(const std::vector<mrdcpq::Decomposition>& pred,
           const std::vector<mrdcpq::Decomposition>& gold) {
    if (pred.size() != gold.size())
        throw LengthMismatch("tda: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(gold.size()) + " gold");
    if (pred.empty()) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (text::match_key(mrdcpq::serialize(pred[i])) ==
            text::match_key(mrdcpq::serialize(gold[i])))
            ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

double ner_accuracy(const std::vector<std::set<std::string>>& pred,
                    const std::vector<std::set<std::string>>& gold) {
    if (pred.size() != gold.size())
        throw LengthMismatch("ner_accuracy: " + std::to_string(pred.size()) +
                             " predictions vs " + std::to_string(gold.size()) + " gold");
    if (pred.empty()) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == gold[i]) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

Metrics answer_metrics(const std::vector<std::set<std::string>>& pred,
                       const std::vector<std::set<std::string>>& gold) {
    if (pred.size() != gold.size())
        throw LengthMismatch("answer_metrics: " + std::to_string(pred.size()) +
                             " predictions vs " + std::to_string(gold.size()) + " gold");
    Metrics m;
    if (pred.empty()) return m;

    double p_sum = 0.0, r_sum = 0.0;
    size_t exact = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const size_t common = intersection_size(pred[i], gold[i]);
        double p;
        if (pred[i].empty())
            p = gold[i].empty() ? 1.0 : 0.0;
        else
            p = static_cast<double>(common) / static_cast<double>(pred[i].size());
        const double r = gold[i].empty()
                             ? 1.0
                             : static_cast<double>(common) / static_cast<double>(gold[i].size());
        const bool is_exact = pred[i] == gold[i];
        if (is_exact) ++exact;
        p_sum += p;
        r_sum += r;
        PerQuestion pq;
        pq.precision = 100.0 * p;
        pq.recall = 100.0 * r;
        pq.exact = is_exact;
        pq.predicted.assign(pred[i].begin(), pred[i].end());
        pq.gold.assign(gold[i].begin(), gold[i].end());
        m.per_question.push_back(std::move(pq));
    }
    const auto n = static_cast<double>(pred.size());
    m.precision = 100.0 * p_sum / n;
    m.recall = 100.0 * r_sum / n;
    m.f1 = f1_from_aggregates(m.precision, m.recall);
    m.accuracy = 100.0 * static_cast<double>(exact) / n;
    return m;
}

// ---------------------------------------------------------------------------
// Full-pipeline evaluation

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["evaluated"] = evaluated;
    j["precision"] = metrics.precision;
    j["recall"] = metrics.recall;
    j["f1"] = metrics.f1;
    j["accuracy"] = metrics.accuracy;
    if (metrics.tda) j["tda"] = *metrics.tda;
    if (metrics.ner_accuracy) j["ner_accuracy"] = *metrics.ner_accuracy;
    j["per_question"] = nlohmann::json::array();
    for (const auto& q : metrics.per_question) {
        nlohmann::json row;
        row["id"] = q.id;
        row["precision"] = q.precision;
        row["recall"] = q.recall;
        row["exact"] = q.exact;
        row["predicted"] = q.predicted;
        row["gold"] = q.gold;
        if (!q.error.empty()) row["error"] = q.error;
        j["per_question"].push_back(std::move(row));
    }
    return j;
}

std::string EvalReport::text_table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::setw(12) << "Precision" << std::setw(12) << "Recall" << std::setw(12)
        << "F1 Score" << std::setw(12) << "Accuracy" << '\n';
    out << std::setw(11) << metrics.precision << '%' << std::setw(11) << metrics.recall
        << '%' << std::setw(11) << metrics.f1 << '%' << std::setw(11) << metrics.accuracy
        << '%' << '\n';
    if (metrics.tda || metrics.ner_accuracy) {
        if (metrics.tda) out << "TDA: " << *metrics.tda << "%\n";
        if (metrics.ner_accuracy) out << "NER accuracy: " << *metrics.ner_accuracy << "%\n";
    }
    return out.str();
}

EvalReport run_eval(const std::vector<mrdcpq::DatasetRecord>& records,
                    mrdcpq::Split split, PipelineContext& ctx,
                    const PipelineComponents& components, int jobs) {
    std::vector<const mrdcpq::DatasetRecord*> selected;
    for (const auto& r : records)
        if (r.split == split) selected.push_back(&r);
    if (selected.empty())
        throw EmptySplit("no records in split '" + mrdcpq::split_name(split) + "'");

    std::vector<AskResult> outcomes(selected.size());
    const int workers = std::max(1, jobs);
    if (workers == 1) {
        for (size_t i = 0; i < selected.size(); ++i)
            outcomes[i] = answer_question(selected[i]->question, ctx, components);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const size_t i = next.fetch_add(1);
                    if (i >= selected.size()) return;
                    outcomes[i] = answer_question(selected[i]->question, ctx, components);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<std::set<std::string>> pred_answers, gold_answers;
    std::vector<std::set<std::string>> pred_entities, gold_entities;
    bool any_gold_entities = false;
    size_t tda_hits = 0;
    for (size_t i = 0; i < selected.size(); ++i) {
        const auto& record = *selected[i];
        const auto& outcome = outcomes[i];
        pred_answers.push_back(outcome.ok() ? normalized(outcome.answer->display)
                                            : std::set<std::string>{});
        gold_answers.push_back(normalized(record.gold_answers));

        std::set<std::string> linked;
        for (const auto& link : outcome.report.links) linked.insert(link.chosen.value);
        pred_entities.push_back(std::move(linked));
        std::set<std::string> gold_set;
        for (const auto& [mention, iri] : record.gold_entities) gold_set.insert(iri.value);
        if (!gold_set.empty()) any_gold_entities = true;
        gold_entities.push_back(std::move(gold_set));

        if (text::match_key(outcome.report.decomposition) ==
            text::match_key(mrdcpq::serialize(record.gold_decomposition)))
            ++tda_hits;
    }

    EvalReport report;
    report.evaluated = selected.size();
    report.metrics = answer_metrics(pred_answers, gold_answers);
    report.metrics.tda =
        100.0 * static_cast<double>(tda_hits) / static_cast<double>(selected.size());
    if (any_gold_entities) // datasets without entity annotations skip the metric
        report.metrics.ner_accuracy = ner_accuracy(pred_entities, gold_entities);
    for (size_t i = 0; i < selected.size(); ++i) {
        auto& pq = report.metrics.per_question[i];
        pq.id = selected[i]->id;
        if (!outcomes[i].report.errors.empty())
            pq.error = outcomes[i].report.errors.front().stage + ": " +
                       outcomes[i].report.errors.front().message;
    }
    return report;
}

} // namespace kgqa::eval
