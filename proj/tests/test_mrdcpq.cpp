#include <doctest.h>

#include <random>

#include <json.hpp>

#include <kgqa/mrdcpq.hpp>

#include "support.hpp"

using namespace kgqa;
using namespace kgqa::mrdcpq;

namespace {

const AnchorStep& anchor(const Decomposition& d, size_t i) {
    return std::get<AnchorStep>(d.steps.at(i).kind);
}
const HopStep& hop(const Decomposition& d, size_t i) {
    return std::get<HopStep>(d.steps.at(i).kind);
}

Decomposition random_valid(std::mt19937& rng) {
    static const char* words[] = {"tehran", "area", "code", "city", "country",
                                  "motto",  "born", "film", "apu",  "actors"};
    std::uniform_int_distribution<int> nsteps(2, 6), nwords(1, 3), word(0, 9), coin(0, 1);
    Decomposition d;
    const int n = nsteps(rng);
    for (int i = 1; i <= n; ++i) {
        std::string payload;
        for (int w = nwords(rng); w > 0; --w) {
            if (!payload.empty()) payload += ' ';
            payload += words[word(rng)];
        }
        if (i == 1)
            d.steps.push_back({1, AnchorStep{payload}});
        else if (i == n && coin(rng))
            d.steps.push_back({i, AggregateStep{StepRef{i - 1}}});
        else
            d.steps.push_back({i, HopStep{payload, StepRef{i - 1}}});
    }
    return d;
}

} // namespace

TEST_SUITE("mrdcpq") {

TEST_CASE("parse a three-step chain") {
    auto d = parse_decomposition("#1 Tehran ; #2 city #1 ; #3 area code #2");
    REQUIRE(d.steps.size() == 3);
    CHECK(anchor(d, 0).text == "Tehran");
    CHECK(hop(d, 1).phrase == "city");
    CHECK(hop(d, 1).ref.index == 1);
    CHECK(hop(d, 2).phrase == "area code");
    CHECK(hop(d, 2).ref.index == 2);
}

TEST_CASE("parse a count chain") {
    auto d = parse_decomposition("#1 Masir Eshgh ; #2 actors #1 ; #3 COUNT #2");
    REQUIRE(d.steps.size() == 3);
    const auto& agg = std::get<AggregateStep>(d.steps[2].kind);
    CHECK(agg.ref.index == 2);
}

TEST_CASE("right-to-left reference rendering is normalized") {
    auto canonical = parse_decomposition("#1 Masir Eshgh ; #2 actors #1 ; #3 COUNT #2");
    auto rtl = parse_decomposition("#1 Masir Eshgh ; #2 actors 1# ; #3 COUNT 2#");
    CHECK(canonical == rtl);
}

TEST_CASE("format errors") {
    CHECK_THROWS_AS(parse_decomposition("#1 A ; #2 rel #3"), FormatError); // forward ref
    CHECK_THROWS_AS(parse_decomposition("#1 A ; #1 B"), FormatError);      // duplicate
    CHECK_THROWS_AS(parse_decomposition("#1 A ; #3 r #1"), FormatError);   // gap
    CHECK_THROWS_AS(parse_decomposition("#1 ; #2 r #1"), FormatError);     // empty payload
    CHECK_THROWS_AS(parse_decomposition("#1 A ; #2 r #1 #1"), FormatError); // two refs
    CHECK_THROWS_AS(parse_decomposition("#1 A ; #2 r #1 extra"), FormatError); // ref not last
    CHECK_THROWS_AS(parse_decomposition("#1 A ; #2 COUNT extra #1"), FormatError);
    CHECK_THROWS_AS(parse_decomposition("no step marker"), FormatError);
    try {
        parse_decomposition("#1 A ; #2 rel #3");
    } catch (const FormatError& e) {
        CHECK(e.step_index == 2);
    }
}

TEST_CASE("serialize produces the canonical whitespace-normalized form") {
    auto d = parse_decomposition("#1   Immanuel   Kant ;   #2 place of birth #1 ; #3 country #2 ; #4 motto #3");
    CHECK(serialize(d) ==
          "#1 Immanuel Kant ; #2 place of birth #1 ; #3 country #2 ; #4 motto #3");
    CHECK(parse_decomposition(serialize(d)) == d);

    Decomposition minimal;
    minimal.steps.push_back({1, AnchorStep{"X"}});
    minimal.steps.push_back({2, HopStep{"r", StepRef{1}}});
    CHECK(serialize(minimal) == "#1 X ; #2 r #1");
}

TEST_CASE("round trip over random valid decompositions") {
    std::mt19937 rng(7);
    for (int i = 0; i < 120; ++i) {
        auto d = random_valid(rng);
        CHECK(parse_decomposition(serialize(d)) == d);
        CHECK(validate(d).empty());
    }
}

TEST_CASE("fixture decomposition cases parse into the expected structure") {
    std::istringstream in(
        testsupport::read_file(testsupport::fixture_path("decomposition_cases.jsonl")));
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        auto d = parse_decomposition(j["text"].get<std::string>());
        const auto& steps = j["steps"];
        REQUIRE(d.steps.size() == steps.size());
        for (size_t i = 0; i < d.steps.size(); ++i) {
            const std::string kind = steps[i]["kind"].get<std::string>();
            CHECK(d.steps[i].index == static_cast<int>(i) + 1);
            if (kind == "anchor") {
                REQUIRE(std::holds_alternative<AnchorStep>(d.steps[i].kind));
                CHECK(anchor(d, i).text == steps[i]["payload"].get<std::string>());
            } else if (kind == "hop") {
                REQUIRE(std::holds_alternative<HopStep>(d.steps[i].kind));
                CHECK(hop(d, i).phrase == steps[i]["payload"].get<std::string>());
                CHECK(hop(d, i).ref.index == steps[i]["ref"].get<int>());
            } else {
                REQUIRE(std::holds_alternative<AggregateStep>(d.steps[i].kind));
                CHECK(std::get<AggregateStep>(d.steps[i].kind).ref.index ==
                      steps[i]["ref"].get<int>());
            }
        }
        ++checked;
    }
    CHECK(checked == 9);
}

TEST_CASE("validate reports each violated invariant") {
    CHECK(validate(parse_decomposition("#1 Tehran ; #2 city #1 ; #3 area code #2")).empty());

    // unreferenced middle hop
    auto unused = parse_decomposition("#1 A ; #2 r #1 ; #3 s #1");
    auto violations = validate(unused);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].step_index == 2);
    CHECK(violations[0].message == "step 2 unused");

    // first step must be an anchor
    Decomposition starts_with_hop;
    starts_with_hop.steps.push_back({1, HopStep{"r", StepRef{1}}});
    starts_with_hop.steps.push_back({2, HopStep{"s", StepRef{1}}});
    bool flagged = false;
    for (const auto& v : validate(starts_with_hop))
        if (v.message == "step 1 must be an Anchor") flagged = true;
    CHECK(flagged);

    // single step is too short
    Decomposition single;
    single.steps.push_back({1, AnchorStep{"A"}});
    CHECK_FALSE(validate(single).empty());

    // an extra anchor validates (multi-entity questions exist in the wild)
    auto multi = parse_decomposition("#1 A ; #2 B ; #3 r #2");
    CHECK(validate(multi).empty());
}

TEST_CASE("dataset loading and split counts") {
    auto loaded = load_dataset(testsupport::fixture_path("dataset_mixed.jsonl"));
    CHECK(loaded.errors.empty());
    CHECK(loaded.records.size() == 10);
    CHECK(loaded.count(Split::Train) == 8);
    CHECK(loaded.count(Split::Dev) == 1);
    CHECK(loaded.count(Split::Test) == 1);
}

TEST_CASE("dataset loader collects record errors and continues") {
    const std::string path = "/tmp/kgqa_bad_dataset.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":"a","question":"q1","decomposition":"#1 X ; #2 r #1","split":"train"})" << "\n";
        out << R"({"id":"b","decomposition":"#1 X ; #2 r #1","split":"train"})" << "\n"; // no question
        out << "not json at all\n";
        out << R"({"id":"c","question":"q2","decomposition":"#1 X ; #2 r #9","split":"train"})" << "\n";
        out << R"({"id":"d","question":"q3","decomposition":"#1 X ; #2 r #1","split":"test","answers":[]})" << "\n";
    }
    auto loaded = load_dataset(path);
    CHECK(loaded.records.size() == 1);
    REQUIRE(loaded.errors.size() == 4);
    CHECK(loaded.errors[0].line == 2);
    CHECK(loaded.errors[1].line == 3);

    CHECK_THROWS_AS(load_dataset("/nonexistent/file.jsonl"), IoError);

    const std::string empty_path = "/tmp/kgqa_empty_dataset.jsonl";
    { std::ofstream out(empty_path); }
    CHECK(load_dataset(empty_path).records.empty());
}

} // TEST_SUITE
