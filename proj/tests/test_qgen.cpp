#include <doctest.h>

#include <random>

#include <httplib.h>
#include <json.hpp>

#include <kgqa/executor.hpp>
#include <kgqa/qgen.hpp>

#include "support.hpp"

using namespace kgqa;
using namespace kgqa::qgen;

namespace {

KnowledgeGraph predicate_graph(const std::vector<std::pair<std::string, std::string>>& preds) {
    KnowledgeGraph kg;
    int i = 0;
    for (const auto& [iri, label] : preds) {
        kg.insert({Iri(iri), Iri(kDefaultLabelPredicate), Literal::plain(label)});
        // one fact per predicate so it occurs in predicate position
        kg.insert({Iri("http://kg/e/s" + std::to_string(i)), Iri(iri),
                   Iri("http://kg/e/o" + std::to_string(i))});
        ++i;
    }
    return kg;
}

LinkResult link_for(int step, const std::string& iri, const std::string& mention) {
    LinkResult link;
    link.mention.text = mention;
    link.mention.step_index = step;
    link.mention.end = mention.size();
    link.chosen = Iri(iri);
    link.ranked = {{Iri(iri), 1.0, 1.0}};
    return link;
}

} // namespace

TEST_SUITE("qgen") {

TEST_CASE("resolve relation by label similarity") {
    auto kg = predicate_graph({{"http://kg/p/country", "country"}});
    CHECK(resolve_relation("country", kg).value == "http://kg/p/country");

    auto kg2 = predicate_graph(
        {{"http://kg/p/headquarter", "headquarter"}, {"http://kg/p/headCoach", "head coach"}});
    CHECK(resolve_relation("headquarter", kg2).value == "http://kg/p/headquarter");
    // exhaustive: best score must be the max over both labels
    CHECK(string_similarity("headquarter", "headquarter") >
          string_similarity("headquarter", "head coach"));

    CHECK_THROWS_AS(resolve_relation("zzz", kg2), UnresolvedRelation);
    try {
        resolve_relation("zzz", kg2);
    } catch (const UnresolvedRelation& e) {
        CHECK(e.phrase == "zzz");
        CHECK(e.best_score < 0.5);
    }
}

TEST_CASE("compile a hop chain") {
    auto kg = testsupport::load_fixture_graph("toy_kg.nt");
    auto d = mrdcpq::parse_decomposition(
        "#1 Digikala ; #2 headquarter #1 ; #3 population #2");
    std::vector<LinkResult> links{link_for(1, "http://kg/e/Digikala", "Digikala")};

    auto plan = compile_chain(d, links, kg);
    REQUIRE(plan.steps.size() == 3);
    CHECK(plan.steps[0].step_index == 1);
    CHECK(std::get<AnchorBind>(plan.steps[0].action).entity.value == "http://kg/e/Digikala");

    const auto& hop2 = std::get<HopQuery>(plan.steps[1].action);
    CHECK(hop2.source_step == 1);
    CHECK(hop2.out_var.name == "x2");
    REQUIRE(hop2.query_template.where.size() == 1);
    CHECK(std::get<Iri>(hop2.query_template.where[0].predicate).value ==
          "http://kg/p/headquarter");
    CHECK(std::get<sparql::Var>(hop2.query_template.where[0].subject).name == kSlotVarName);

    const auto& hop3 = std::get<HopQuery>(plan.steps[2].action);
    CHECK(std::get<Iri>(hop3.query_template.where[0].predicate).value ==
          "http://kg/p/population");
}

TEST_CASE("compile a count chain") {
    auto kg = testsupport::load_fixture_graph("toy_kg.nt");
    auto d = mrdcpq::parse_decomposition("#1 Masir Eshgh ; #2 actors #1 ; #3 COUNT #2");
    std::vector<LinkResult> links{link_for(1, "http://kg/e/MasirEshgh", "Masir Eshgh")};
    auto plan = compile_chain(d, links, kg);
    REQUIRE(plan.steps.size() == 3);
    CHECK(std::get<CountStep>(plan.steps[2].action).source_step == 2);
}

TEST_CASE("unsupported shapes and missing links") {
    auto kg = testsupport::load_fixture_graph("toy_kg.nt");

    auto two_anchors = mrdcpq::parse_decomposition("#1 Tehran ; #2 Digikala ; #3 country #2");
    std::vector<LinkResult> links{link_for(1, "http://kg/e/Tehran", "Tehran"),
                                  link_for(2, "http://kg/e/Digikala", "Digikala")};
    CHECK_THROWS_AS(compile_chain(two_anchors, links, kg), UnsupportedShape);
    CHECK_THROWS_AS(compile_joined(two_anchors, links, kg), UnsupportedShape);

    auto chain = mrdcpq::parse_decomposition("#1 Tehran ; #2 country #1");
    CHECK_THROWS_AS(compile_chain(chain, {}, kg), MissingLink);

    // COUNT directly over the anchor has no joined equivalent
    auto count_anchor = mrdcpq::parse_decomposition("#1 Tehran ; #2 COUNT #1");
    std::vector<LinkResult> tehran{link_for(1, "http://kg/e/Tehran", "Tehran")};
    CHECK_THROWS_AS(compile_chain(count_anchor, tehran, kg), UnsupportedShape);
    CHECK_THROWS_AS(compile_joined(count_anchor, tehran, kg), UnsupportedShape);
}

TEST_CASE("joined query shapes") {
    auto kg = testsupport::load_fixture_graph("toy_kg.nt");
    std::vector<LinkResult> tehran{link_for(1, "http://kg/e/Tehran", "Tehran")};

    auto area = mrdcpq::parse_decomposition("#1 Tehran ; #2 city #1 ; #3 area code #2");
    auto joined = compile_joined(area, tehran, kg);
    REQUIRE(joined.where.size() == 2);
    CHECK(std::get<Iri>(joined.where[0].subject).value == "http://kg/e/Tehran");
    CHECK(std::get<sparql::Var>(joined.where[1].subject).name == "x2");
    REQUIRE(joined.projection.size() == 1);
    CHECK(joined.projection[0].name == "x3");

    auto one_hop = mrdcpq::parse_decomposition("#1 Tehran ; #2 country #1");
    auto joined1 = compile_joined(one_hop, tehran, kg);
    CHECK(joined1.where.size() == 1);

    auto counted = mrdcpq::parse_decomposition("#1 Tehran ; #2 city #1 ; #3 COUNT #2");
    auto joinedc = compile_joined(counted, tehran, kg);
    REQUIRE(joinedc.count.has_value());
    CHECK(joinedc.count->counted.name == "x2");
    CHECK(joinedc.count->distinct);
}

TEST_CASE("chained execution equals the joined query on random graphs") {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 60; ++trial) {
        // random graph over a handful of entities and labeled relations
        KnowledgeGraph kg;
        std::uniform_int_distribution<int> entity(0, 6), rel(0, 2), facts(3, 30), coin(0, 1);
        std::uniform_int_distribution<int> hops(1, 4);
        for (int r = 0; r <= 2; ++r)
            kg.insert({Iri("http://kg/p/r" + std::to_string(r)), Iri(kDefaultLabelPredicate),
                       Literal::plain("rel" + std::to_string(r))});
        const int n = facts(rng);
        for (int i = 0; i < n; ++i) {
            Node object = coin(rng) ? Node(Iri("http://kg/e/" + std::to_string(entity(rng))))
                                    : Node(Literal::plain("v" + std::to_string(entity(rng))));
            kg.insert({Iri("http://kg/e/" + std::to_string(entity(rng))),
                       Iri("http://kg/p/r" + std::to_string(rel(rng))), object});
        }
        kg.freeze();

        const std::string anchor_iri = "http://kg/e/" + std::to_string(entity(rng));
        mrdcpq::Decomposition d;
        d.steps.push_back({1, mrdcpq::AnchorStep{"anchor"}});
        const int h = hops(rng);
        for (int i = 2; i <= 1 + h; ++i)
            d.steps.push_back(
                {i, mrdcpq::HopStep{"rel" + std::to_string(rel(rng)), mrdcpq::StepRef{i - 1}}});
        if (coin(rng))
            d.steps.push_back({2 + h, mrdcpq::AggregateStep{mrdcpq::StepRef{1 + h}}});
        std::vector<LinkResult> links{link_for(1, anchor_iri, "anchor")};

        auto plan = compile_chain(d, links, kg);
        auto joined = compile_joined(d, links, kg);
        LocalBackend backend(std::make_shared<const KnowledgeGraph>(kg));
        auto answer = execute_plan(backend, plan);
        auto table = sparql::evaluate(kg, joined);

        std::vector<Node> joined_values;
        for (const auto& row : table.rows) joined_values.push_back(row[0]);
        std::sort(joined_values.begin(), joined_values.end(), &node_less);
        joined_values.erase(
            std::unique(joined_values.begin(), joined_values.end(), &node_eq),
            joined_values.end());

        REQUIRE(answer.values.size() == joined_values.size());
        for (size_t i = 0; i < joined_values.size(); ++i)
            CHECK(node_eq(answer.values[i], joined_values[i]));
    }
}

TEST_CASE("external query generator adapter") {
    auto kg = testsupport::load_fixture_graph("toy_kg.nt");
    auto d = mrdcpq::parse_decomposition("#1 Masir Eshgh ; #2 actors #1 ; #3 COUNT #2");
    std::vector<LinkResult> links{link_for(1, "http://kg/e/MasirEshgh", "Masir Eshgh")};

    httplib::Server server;
    server.Post("/compile", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        CHECK(body["decomposition"] == "#1 Masir Eshgh ; #2 actors #1 ; #3 COUNT #2");
        CHECK(body["links"][0]["iri"] == "http://kg/e/MasirEshgh");
        nlohmann::json reply;
        reply["queries"] = {"SELECT ?x2 WHERE { ?__slot <http://kg/p/actors> ?x2 . }",
                            "COUNT"};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const auto url = "http://127.0.0.1:" + std::to_string(port) + "/compile";

    auto plan = compile_external(d, links, AdapterSpec::http(url));
    REQUIRE(plan.steps.size() == 3);
    CHECK(std::holds_alternative<AnchorBind>(plan.steps[0].action));
    CHECK(std::holds_alternative<HopQuery>(plan.steps[1].action));
    CHECK(std::holds_alternative<CountStep>(plan.steps[2].action));

    // both compilers execute to the same answer
    auto rule_plan = compile_chain(d, links, kg);
    LocalBackend backend(std::make_shared<const KnowledgeGraph>(kg));
    auto a = execute_plan(backend, plan);
    auto b = execute_plan(backend, rule_plan);
    REQUIRE(a.values.size() == 1);
    CHECK(node_eq(a.values[0], b.values[0]));
    CHECK(std::get<Literal>(a.values[0]).lexical == "3");

    server.stop();
    t.join();
}

TEST_CASE("external adapter protocol violations") {
    auto d = mrdcpq::parse_decomposition("#1 Tehran ; #2 city #1");
    std::vector<LinkResult> links{link_for(1, "http://kg/e/Tehran", "Tehran")};

    httplib::Server server;
    server.Post("/short", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"queries":[]})", "application/json");
    });
    server.Post("/badsparql", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"queries":["SELECT nonsense"]})", "application/json");
    });
    server.Post("/multipattern", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            R"({"queries":["SELECT ?a WHERE { ?__slot <http://p> ?b . ?b <http://q> ?a . }"]})",
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const auto base = "http://127.0.0.1:" + std::to_string(port);

    CHECK_THROWS_AS(compile_external(d, links, AdapterSpec::http(base + "/short")),
                    AdapterProtocolError);
    CHECK_THROWS_AS(compile_external(d, links, AdapterSpec::http(base + "/badsparql")),
                    AdapterProtocolError);
    CHECK_THROWS_AS(compile_external(d, links, AdapterSpec::http(base + "/multipattern")),
                    AdapterProtocolError);

    server.stop();
    t.join();
}

} // TEST_SUITE
