// kgqa: question answering over an RDF graph via staged decomposition,
// entity linking, SPARQL compilation and sequential execution. Every stage is
// also exposed as its own subcommand.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <kgqa/eval.hpp>
#include <kgqa/executor.hpp>
#include <kgqa/text.hpp>

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string kg_path;
    std::string endpoint;
    std::string label_pred = kgqa::kDefaultLabelPredicate;
    std::string abstract_pred = kgqa::kDefaultAbstractPredicate;
    bool json_output = false;
    int jobs = 1;
    int candidates = kgqa::kDefaultCandidateCount;
    double relation_threshold = kgqa::qgen::kDefaultRelationThreshold;
    long timeout_ms = 30000;
    std::string decomposer = "pattern"; // pattern | extern:<cmd> | http:<url>
    std::string embedder = "reference"; // reference | http:<url>
    std::string qgen = "rule";          // rule | http:<url>
};

std::chrono::milliseconds timeout_of(const Options& o) {
    return std::chrono::milliseconds(o.timeout_ms);
}

kgqa::PipelineContext make_context(const Options& o) {
    if (!o.kg_path.empty() && !o.endpoint.empty())
        throw UsageError("use exactly one of --kg and --endpoint");
    if (o.kg_path.empty() && o.endpoint.empty())
        throw UsageError("a backend is required: pass --kg <file> or --endpoint <url>");
    if (!o.kg_path.empty())
        return kgqa::PipelineContext::local(kgqa::load_graph_file(
            o.kg_path, kgqa::Iri(o.label_pred), kgqa::Iri(o.abstract_pred)));
    return kgqa::PipelineContext::remote(o.endpoint, timeout_of(o), kgqa::Iri(o.label_pred),
                                         kgqa::Iri(o.abstract_pred));
}

kgqa::PipelineComponents make_components(const Options& o) {
    if (o.candidates < 1) throw UsageError("--candidates must be at least 1");
    if (o.relation_threshold < 0.0 || o.relation_threshold > 1.0)
        throw UsageError("--relation-threshold must be within [0, 1]");
    if (o.timeout_ms <= 0) throw UsageError("--timeout must be positive");
    kgqa::PipelineComponents c;
    c.candidates = o.candidates;
    c.relation_threshold = o.relation_threshold;
    const auto timeout = timeout_of(o);
    if (o.decomposer != "pattern") {
        if (o.decomposer.rfind("extern:", 0) == 0)
            c.decomposer_adapter = kgqa::AdapterSpec::command(o.decomposer.substr(7), timeout);
        else if (o.decomposer.rfind("http:", 0) == 0)
            c.decomposer_adapter = kgqa::AdapterSpec::http(o.decomposer.substr(5), timeout);
        else
            throw UsageError("--decomposer must be pattern, extern:<cmd> or http:<url>");
    }
    if (o.embedder != "reference") {
        if (o.embedder.rfind("http:", 0) == 0)
            c.embedder_adapter = kgqa::AdapterSpec::http(o.embedder.substr(5), timeout);
        else
            throw UsageError("--embedder must be reference or http:<url>");
    }
    if (o.qgen != "rule") {
        if (o.qgen.rfind("http:", 0) == 0)
            c.qgen_adapter = kgqa::AdapterSpec::http(o.qgen.substr(5), timeout);
        else
            throw UsageError("--qgen must be rule or http:<url>");
    }
    return c;
}

int cmd_ingest(const Options& o, const std::string& out_path) {
    if (o.kg_path.empty()) throw UsageError("ingest requires --kg <file>");
    auto kg = kgqa::load_graph_file(o.kg_path, kgqa::Iri(o.label_pred),
                                    kgqa::Iri(o.abstract_pred));
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw kgqa::IoError("cannot write " + out_path);
        out << kgqa::serialize_ntriples(kg.all_triples());
    }
    if (o.json_output) {
        json j;
        j["triples"] = kg.size();
        j["labeled_entities"] = kg.labeled_entities().size();
        j["labeled_predicates"] = kg.labeled_predicates().size();
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "triples: " << kg.size() << "\n"
                  << "labeled entities: " << kg.labeled_entities().size() << "\n"
                  << "labeled predicates: " << kg.labeled_predicates().size() << "\n";
    }
    return 0;
}

int cmd_ask(const Options& o, const std::string& question) {
    auto ctx = make_context(o);
    auto components = make_components(o);
    auto result = kgqa::answer_question(question, ctx, components);
    if (o.json_output) {
        std::cout << result.report.to_json().dump() << "\n";
    } else if (result.ok()) {
        for (const auto& line : result.answer->display) std::cout << line << "\n";
        for (const auto& note : result.answer->notes) std::cerr << "note: " << note << "\n";
    }
    if (!result.ok()) {
        const auto& e = result.report.errors.front();
        std::cerr << "pipeline error at stage " << e.stage << ": " << e.message << "\n";
        return 1;
    }
    return 0;
}

int cmd_decompose(const Options& o, const std::string& question) {
    auto components = make_components(o);
    kgqa::mrdcpq::Decomposition d;
    if (components.decomposer_adapter) {
        d = kgqa::decompose_external(question, *components.decomposer_adapter);
    } else {
        auto ctx = make_context(o);
        d = kgqa::decompose(question, ctx.decomposer_cfg);
    }
    if (o.json_output) {
        json j;
        j["question"] = question;
        j["decomposition"] = kgqa::mrdcpq::serialize(d);
        json steps = json::array();
        for (const auto& step : d.steps) {
            json s;
            s["index"] = step.index;
            if (const auto* a = std::get_if<kgqa::mrdcpq::AnchorStep>(&step.kind)) {
                s["kind"] = "anchor";
                s["payload"] = a->text;
            } else if (const auto* h = std::get_if<kgqa::mrdcpq::HopStep>(&step.kind)) {
                s["kind"] = "hop";
                s["payload"] = h->phrase;
                s["ref"] = h->ref.index;
            } else {
                s["kind"] = "count";
                s["ref"] = std::get<kgqa::mrdcpq::AggregateStep>(step.kind).ref.index;
            }
            steps.push_back(std::move(s));
        }
        j["steps"] = std::move(steps);
        std::cout << j.dump() << "\n";
    } else {
        std::cout << kgqa::mrdcpq::serialize(d) << "\n";
    }
    return 0;
}

int cmd_link(const Options& o, const std::string& question, const std::string& decomposition) {
    auto ctx = make_context(o);
    auto components = make_components(o);
    kgqa::mrdcpq::Decomposition d;
    if (!decomposition.empty())
        d = kgqa::mrdcpq::parse_decomposition(decomposition);
    else if (!question.empty())
        d = components.decomposer_adapter
                ? kgqa::decompose_external(question, *components.decomposer_adapter)
                : kgqa::decompose(question, ctx.decomposer_cfg);
    else
        throw UsageError("link requires --question or --decomposition");

    auto mentions = kgqa::recognize_entities(d, ctx.decomposer_cfg.gazetteer);
    json out = json::array();
    for (const auto& m : mentions) {
        // with no question to compare against, rerank against the mention
        const std::string query_text = question.empty() ? m.text : question;
        auto candidates = kgqa::generate_candidates(m, *ctx.catalog, components.candidates);
        std::unique_ptr<kgqa::Embedder> http;
        if (components.embedder_adapter)
            http = std::make_unique<kgqa::HttpEmbedder>(*components.embedder_adapter);
        auto link = kgqa::rerank(query_text, std::move(candidates), *ctx.catalog, http.get());
        link.mention = m;
        if (o.json_output) {
            json l;
            l["step"] = m.step_index;
            l["mention"] = m.text;
            l["chosen"] = link.chosen.value;
            l["candidates"] = json::array();
            for (const auto& c : link.ranked)
                l["candidates"].push_back({{"iri", c.entity.value},
                                           {"string_score", c.string_score},
                                           {"dense_score", *c.dense_score}});
            out.push_back(std::move(l));
        } else {
            std::cout << "#" << m.step_index << " " << m.text << " -> " << link.chosen.value
                      << "\n";
        }
    }
    if (o.json_output) std::cout << out.dump() << "\n";
    return 0;
}

int cmd_compile(const Options& o, const std::string& question, const std::string& decomposition) {
    auto ctx = make_context(o);
    auto components = make_components(o);
    kgqa::mrdcpq::Decomposition d;
    if (!decomposition.empty())
        d = kgqa::mrdcpq::parse_decomposition(decomposition);
    else if (!question.empty())
        d = components.decomposer_adapter
                ? kgqa::decompose_external(question, *components.decomposer_adapter)
                : kgqa::decompose(question, ctx.decomposer_cfg);
    else
        throw UsageError("compile requires --question or --decomposition");

    auto mentions = kgqa::recognize_entities(d, ctx.decomposer_cfg.gazetteer);
    std::vector<kgqa::LinkResult> links;
    for (const auto& m : mentions) {
        const std::string query_text = question.empty() ? m.text : question;
        auto candidates = kgqa::generate_candidates(m, *ctx.catalog, components.candidates);
        auto link = kgqa::rerank(query_text, std::move(candidates), *ctx.catalog, nullptr);
        link.mention = m;
        links.push_back(std::move(link));
    }
    kgqa::qgen::QueryPlan plan =
        components.qgen_adapter
            ? kgqa::qgen::compile_external(d, links, *components.qgen_adapter)
            : kgqa::qgen::compile_chain(d, links, *ctx.catalog, components.relation_threshold);

    json j;
    j["decomposition"] = kgqa::mrdcpq::serialize(d);
    j["queries"] = json::array();
    for (const auto& step : plan.steps) {
        if (const auto* hop = std::get_if<kgqa::qgen::HopQuery>(&step.action))
            j["queries"].push_back(kgqa::sparql::serialize_query(hop->query_template));
        else if (std::holds_alternative<kgqa::qgen::CountStep>(step.action))
            j["queries"].push_back("COUNT");
    }
    if (!components.qgen_adapter)
        j["joined_query"] = kgqa::sparql::serialize_query(
            kgqa::qgen::compile_joined(d, links, *ctx.catalog, components.relation_threshold));
    if (o.json_output) {
        std::cout << j.dump() << "\n";
    } else {
        for (const auto& q : j["queries"]) std::cout << q.get<std::string>() << "\n";
        if (j.contains("joined_query"))
            std::cout << "joined: " << j["joined_query"].get<std::string>() << "\n";
    }
    return 0;
}

int cmd_query(const Options& o, const std::string& sparql_text) {
    kgqa::sparql::ResultTable table;
    if (!o.kg_path.empty() && !o.endpoint.empty())
        throw UsageError("use exactly one of --kg and --endpoint");
    if (!o.kg_path.empty()) {
        auto kg = kgqa::load_graph_file(o.kg_path, kgqa::Iri(o.label_pred),
                                        kgqa::Iri(o.abstract_pred));
        table = kgqa::sparql::evaluate(kg, kgqa::sparql::parse_select(sparql_text));
    } else if (!o.endpoint.empty()) {
        table = kgqa::sparql::remote_query_text(o.endpoint, sparql_text, timeout_of(o));
    } else {
        throw UsageError("query requires --kg <file> or --endpoint <url>");
    }
    std::cout << kgqa::sparql::serialize_results(table) << "\n";
    return 0;
}

int cmd_eval(const Options& o, const std::string& dataset_path, const std::string& split_name) {
    kgqa::mrdcpq::Split split;
    if (split_name == "train") split = kgqa::mrdcpq::Split::Train;
    else if (split_name == "dev") split = kgqa::mrdcpq::Split::Dev;
    else if (split_name == "test") split = kgqa::mrdcpq::Split::Test;
    else throw UsageError("--split must be train, dev or test");

    auto ctx = make_context(o);
    auto components = make_components(o);
    auto loaded = kgqa::mrdcpq::load_dataset(dataset_path);
    for (const auto& e : loaded.errors)
        std::cerr << "dataset line " << e.line << ": " << e.reason << "\n";
    auto report = kgqa::eval::run_eval(loaded.records, split, ctx, components, o.jobs);
    if (o.json_output)
        std::cout << report.to_json().dump() << "\n";
    else
        std::cout << report.text_table();
    return 0;
}

} // namespace

// Configuration precedence: command-line flags, then KGQA_* environment
// variables, then the optional --config file (same keys as the flags).
struct LayeredOption {
    CLI::Option* opt;
    std::string env;
    std::string key;
    std::function<void(const std::string&)> assign;
};

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto trimmed = kgqa::text::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw UsageError("config lines must be key=value: " + trimmed);
        out[kgqa::text::trim(trimmed.substr(0, eq))] =
            kgqa::text::trim(trimmed.substr(eq + 1));
    }
    return out;
}

void apply_layers(const std::vector<LayeredOption>& layers, const std::string& config_path) {
    std::map<std::string, std::string> file_cfg;
    if (!config_path.empty()) file_cfg = read_config_file(config_path);
    for (const auto& layer : layers) {
        if (layer.opt->count() > 0) continue; // explicit flag wins
        if (const char* env = std::getenv(layer.env.c_str()); env && *env) {
            layer.assign(env);
            continue;
        }
        if (auto it = file_cfg.find(layer.key); it != file_cfg.end()) layer.assign(it->second);
    }
}

int main(int argc, char** argv) {
    CLI::App app{"multi-hop question answering over an RDF knowledge graph"};
    app.fallthrough();

    Options o;
    std::vector<LayeredOption> layers;
    auto layered_str = [&](CLI::Option* opt, const char* env, const char* key,
                           std::string& target) {
        layers.push_back({opt, env, key, [&target](const std::string& v) { target = v; }});
    };

    layered_str(app.add_option("--kg", o.kg_path, "N-Triples file backing the local store"),
                "KGQA_KG", "kg", o.kg_path);
    layered_str(app.add_option("--endpoint", o.endpoint, "remote SPARQL endpoint URL"),
                "KGQA_ENDPOINT", "endpoint", o.endpoint);
    layered_str(app.add_option("--label-pred", o.label_pred, "label predicate IRI"),
                "KGQA_LABEL_PRED", "label-pred", o.label_pred);
    layered_str(app.add_option("--abstract-pred", o.abstract_pred, "abstract predicate IRI"),
                "KGQA_ABSTRACT_PRED", "abstract-pred", o.abstract_pred);
    layered_str(app.add_option("--decomposer", o.decomposer,
                               "pattern | extern:<cmd> | http:<url>"),
                "KGQA_DECOMPOSER", "decomposer", o.decomposer);
    layered_str(app.add_option("--embedder", o.embedder, "reference | http:<url>"),
                "KGQA_EMBEDDER", "embedder", o.embedder);
    layered_str(app.add_option("--qgen", o.qgen, "rule | http:<url>"), "KGQA_QGEN", "qgen",
                o.qgen);
    layers.push_back({app.add_flag("--json", o.json_output, "emit JSON on stdout"),
                      "KGQA_JSON", "json", [&o](const std::string& v) {
                          o.json_output = v == "1" || v == "true" || v == "yes";
                      }});
    layers.push_back({app.add_option("--jobs", o.jobs, "eval worker count"), "KGQA_JOBS",
                      "jobs",
                      [&o](const std::string& v) { o.jobs = std::stoi(v); }});
    layers.push_back({app.add_option("--candidates", o.candidates,
                                     "linking candidates per mention"),
                      "KGQA_CANDIDATES", "candidates",
                      [&o](const std::string& v) { o.candidates = std::stoi(v); }});
    layers.push_back({app.add_option("--relation-threshold", o.relation_threshold,
                                     "minimum similarity for relation resolution"),
                      "KGQA_RELATION_THRESHOLD", "relation-threshold",
                      [&o](const std::string& v) { o.relation_threshold = std::stod(v); }});
    layers.push_back({app.add_option("--timeout", o.timeout_ms,
                                     "network/adapter timeout in milliseconds"),
                      "KGQA_TIMEOUT", "timeout",
                      [&o](const std::string& v) { o.timeout_ms = std::stol(v); }});

    std::string config_path;
    auto* config_opt = app.add_option("--config", config_path, "key=value config file");
    app.require_subcommand(1);

    std::string question, decomposition, sparql_text, dataset_path, out_path;
    std::string split_name = "test";

    auto* ingest = app.add_subcommand("ingest", "load and report on an N-Triples file");
    ingest->add_option("--out", out_path, "write the canonical serialization here");

    auto* ask = app.add_subcommand("ask", "answer a question end to end");
    ask->add_option("question", question, "the question")->required();

    auto* decompose = app.add_subcommand("decompose", "decompose a question into steps");
    decompose->add_option("--question", question, "the question")->required();

    auto* link = app.add_subcommand("link", "recognize and link entities");
    link->add_option("--question", question, "question to decompose first");
    link->add_option("--decomposition", decomposition, "canonical decomposition text");

    auto* compile = app.add_subcommand("compile", "compile a decomposition into SPARQL");
    compile->add_option("--question", question, "question to decompose first");
    compile->add_option("--decomposition", decomposition, "canonical decomposition text");

    auto* query = app.add_subcommand("query", "run a SPARQL query");
    query->add_option("--sparql", sparql_text, "query text")->required();

    auto* eval_cmd = app.add_subcommand("eval", "score the pipeline over a dataset split");
    eval_cmd->add_option("--dataset", dataset_path, "JSON Lines dataset")->required();
    eval_cmd->add_option("--split", split_name, "train | dev | test");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (config_opt->count() == 0)
            if (const char* env = std::getenv("KGQA_CONFIG"); env && *env) config_path = env;
        apply_layers(layers, config_path);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(o, out_path);
        if (ask->parsed()) return cmd_ask(o, question);
        if (decompose->parsed()) return cmd_decompose(o, question);
        if (link->parsed()) return cmd_link(o, question, decomposition);
        if (compile->parsed()) return cmd_compile(o, question, decomposition);
        if (query->parsed()) return cmd_query(o, sparql_text);
        if (eval_cmd->parsed()) return cmd_eval(o, dataset_path, split_name);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const kgqa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
