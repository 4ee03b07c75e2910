#include <doctest.h>

#include <random>

#include <kgqa/kg_store.hpp>

#include "support.hpp"

using namespace kgqa;

namespace {

Iri iri(const std::string& s) { return Iri(s); }

KnowledgeGraph mini_graph() {
    // birthplace chain without labels
    KnowledgeGraph kg;
    kg.insert({iri("http://kg/e/AliDaei"), iri("http://kg/p/placeOfBirth"),
               iri("http://kg/e/Ardabil")});
    kg.insert({iri("http://kg/e/Ardabil"), iri("http://kg/p/country"), iri("http://kg/e/Iran")});
    return kg;
}

// Independent oracle: filter a full scan.
std::vector<Triple> scan_filter(const KnowledgeGraph& kg, const std::optional<Iri>& s,
                                const std::optional<Iri>& p, const std::optional<Node>& o) {
    std::vector<Triple> out;
    for (const auto& t : kg.all_triples()) {
        if (s && !(t.subject == *s)) continue;
        if (p && !(t.predicate == *p)) continue;
        if (o && !node_eq(t.object, *o)) continue;
        out.push_back(t);
    }
    return out;
}

} // namespace

TEST_SUITE("kg_store") {

TEST_CASE("parse single statement") {
    auto triples = parse_ntriples(
        "<http://kg/e/Tehran> <http://kg/p/country> <http://kg/e/Iran> .");
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].subject.value == "http://kg/e/Tehran");
    CHECK(triples[0].predicate.value == "http://kg/p/country");
    CHECK(std::get<Iri>(triples[0].object).value == "http://kg/e/Iran");
}

TEST_CASE("empty document and comments") {
    CHECK(parse_ntriples("").empty());
    CHECK(parse_ntriples("# only a comment\n\n   \n").empty());
}

TEST_CASE("order preserved") {
    auto triples = parse_ntriples("<http://b> <http://p> \"2\" .\n<http://a> <http://p> \"1\" .\n");
    REQUIRE(triples.size() == 2);
    CHECK(triples[0].subject.value == "http://b");
}

TEST_CASE("malformed lines") {
    CHECK_THROWS_AS(parse_ntriples("<http://a> <http://p> \"v\"@fa^^<http://t> ."),
                    MalformedLine);
    CHECK_THROWS_AS(parse_ntriples("<http://a> <http://p> <http://b>"), MalformedLine);
    CHECK_THROWS_AS(parse_ntriples("<http://a> <http://p> \"unterminated ."), MalformedLine);
    CHECK_THROWS_AS(parse_ntriples("<http://a> <http://p ."), MalformedLine);
    // all-or-nothing: the good first line does not survive the bad second
    CHECK_THROWS_AS(parse_ntriples("<http://a> <http://p> <http://b> .\nbad line ."),
                    MalformedLine);
    try {
        parse_ntriples("<http://a> <http://p> <http://b> .\nbad line .");
    } catch (const MalformedLine& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("literal forms and escapes") {
    auto triples = parse_ntriples(
        "<http://a> <http://p> \"va\\\"lue\\n\"@fa .\n"
        "<http://a> <http://q> \"42\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n");
    REQUIRE(triples.size() == 2);
    const auto& lit = std::get<Literal>(triples[0].object);
    CHECK(lit.lexical == "va\"lue\n");
    CHECK(lit.lang == "fa");
    CHECK(std::get<Literal>(triples[1].object).datatype->value ==
          "http://www.w3.org/2001/XMLSchema#integer");
}

TEST_CASE("insert is idempotent and indexes stay in sync") {
    KnowledgeGraph kg;
    Triple t{iri("http://e"), iri("http://p"), Literal::plain("v")};
    kg.insert(t);
    const size_t before = kg.size();
    kg.insert(t);
    CHECK(kg.size() == before);
    auto sizes = kg.index_sizes();
    CHECK(sizes[0] == sizes[1]);
    CHECK(sizes[1] == sizes[2]);
}

TEST_CASE("label and abstract indexes") {
    KnowledgeGraph kg;
    CHECK(kg.labels_of(iri("http://e")).empty());
    kg.insert({iri("http://e"), Iri(kDefaultLabelPredicate), Literal::plain("Tehran")});
    kg.insert({iri("http://e"), Iri(kDefaultLabelPredicate), Literal::plain("Teheran")});
    CHECK(kg.labels_of(iri("http://e")).size() == 2);
    CHECK(kg.labels_of(iri("http://e")).contains("Tehran"));

    CHECK_FALSE(kg.abstract_of(iri("http://e")).has_value());
    kg.insert({iri("http://e"), Iri(kDefaultAbstractPredicate), Literal::plain("zz text")});
    kg.insert({iri("http://e"), Iri(kDefaultAbstractPredicate), Literal::plain("aa text")});
    CHECK(kg.abstract_of(iri("http://e")) == "aa text"); // smallest wins
}

TEST_CASE("freeze forbids mutation") {
    KnowledgeGraph kg = mini_graph();
    kg.freeze();
    CHECK_THROWS_AS(kg.insert({iri("http://x"), iri("http://y"), iri("http://z")}),
                    std::logic_error);
}

TEST_CASE("match_pattern on the birthplace chain") {
    KnowledgeGraph kg = mini_graph();
    // Tehran is not a subject here
    CHECK(kg.match_pattern(iri("http://kg/e/Tehran"), iri("http://kg/p/country"), std::nullopt)
              .empty());
    auto rows =
        kg.match_pattern(iri("http://kg/e/Ardabil"), iri("http://kg/p/country"), std::nullopt);
    REQUIRE(rows.size() == 1);
    CHECK(std::get<Iri>(rows[0].object).value == "http://kg/e/Iran");
    CHECK(kg.match_pattern(std::nullopt, std::nullopt, std::nullopt).size() == 2);
}

TEST_CASE("match_pattern equals full-scan filter on random graphs") {
    std::mt19937 rng(20240811);
    for (int trial = 0; trial < 60; ++trial) {
        KnowledgeGraph kg;
        std::uniform_int_distribution<int> entity(0, 7), pred(0, 3), size(0, 200), kind(0, 3);
        const int n = size(rng);
        std::vector<Iri> subjects, predicates;
        std::vector<Node> objects;
        for (int i = 0; i < n; ++i) {
            Iri s = iri("http://e/" + std::to_string(entity(rng)));
            Iri p = iri("http://p/" + std::to_string(pred(rng)));
            Node o = kind(rng) == 0
                         ? Node(Literal::plain("v" + std::to_string(entity(rng))))
                         : Node(iri("http://e/" + std::to_string(entity(rng))));
            kg.insert({s, p, o});
            subjects.push_back(s);
            predicates.push_back(p);
            objects.push_back(o);
        }
        auto sizes = kg.index_sizes();
        CHECK(sizes[0] == sizes[1]);
        CHECK(sizes[1] == sizes[2]);
        if (n == 0) continue;
        for (int probe = 0; probe < 8; ++probe) {
            std::uniform_int_distribution<size_t> pick(0, subjects.size() - 1);
            std::optional<Iri> s, p;
            std::optional<Node> o;
            if (kind(rng) < 2) s = subjects[pick(rng)];
            if (kind(rng) < 2) p = predicates[pick(rng)];
            if (kind(rng) < 2) o = objects[pick(rng)];
            auto expected = scan_filter(kg, s, p, o);
            auto actual = kg.match_pattern(s, p, o);
            REQUIRE(actual.size() == expected.size());
            for (size_t i = 0; i < actual.size(); ++i) CHECK(actual[i] == expected[i]);
        }
    }
}

TEST_CASE("serialization round trip on fixtures") {
    for (const char* name : {"mini.nt", "toy_kg.nt", "nearmiss.nt"}) {
        const std::string text = testsupport::read_file(testsupport::fixture_path(name));
        auto first = parse_ntriples(text);
        auto second = parse_ntriples(serialize_ntriples(first));
        REQUIRE(first.size() == second.size());
        for (size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
    }
}

TEST_CASE("custom label and abstract predicates") {
    KnowledgeGraph kg(Iri("http://my/name"), Iri("http://my/summary"));
    kg.insert({iri("http://e"), iri("http://my/name"), Literal::plain("Tehran")});
    kg.insert({iri("http://e"), iri("http://my/summary"), Literal::plain("capital")});
    kg.insert({iri("http://e"), Iri(kDefaultLabelPredicate), Literal::plain("ignored")});
    CHECK(kg.labels_of(iri("http://e")) == std::set<std::string>{"Tehran"});
    CHECK(kg.abstract_of(iri("http://e")) == "capital");
}

TEST_CASE("iri validation") {
    CHECK_THROWS_AS(Iri(""), Error);
    CHECK_THROWS_AS(Iri("http://a b"), Error);
    CHECK_THROWS_AS(Iri("http://a<b>"), Error);
}

} // TEST_SUITE
