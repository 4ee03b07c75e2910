#include <kgqa/mrdcpq.hpp>
#include <kgqa/text.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kgqa::mrdcpq {

using json = nlohmann::json;

FormatError::FormatError(int step_index, const std::string& reason)
    : Error("step " + std::to_string(step_index) + ": " + reason),
      step_index(step_index) {}

namespace {

// `#12` or the RTL-rendered `12#`; returns 0 when the token is not a
// reference.
int ref_token_value(const std::string& tok) {
    if (tok.size() < 2) return 0;
    std::string digits;
    if (tok.front() == '#')
        digits = tok.substr(1);
    else if (tok.back() == '#')
        digits = tok.substr(0, tok.size() - 1);
    else
        return 0;
    if (digits.empty() || digits.size() > 6 ||
        !std::all_of(digits.begin(), digits.end(),
                     [](unsigned char c) { return std::isdigit(c); }))
        return 0;
    return std::stoi(digits);
}

std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string join(const std::vector<std::string>& tokens, size_t begin, size_t end) {
    std::string out;
    for (size_t i = begin; i < end; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

} // namespace

Decomposition parse_decomposition(std::string_view input) {
    const std::string normalized = text::nfc(std::string(input));
    std::vector<std::string> chunks;
    std::string current;
    for (char c : normalized) {
        if (c == ';') {
            chunks.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    chunks.push_back(current);

    Decomposition d;
    int expected_index = 1;
    for (const auto& chunk : chunks) {
        auto tokens = whitespace_tokens(chunk);
        if (tokens.empty()) {
            if (chunks.size() == 1) break; // wholly empty input -> empty decomposition
            throw FormatError(expected_index, "empty step");
        }
        int declared = ref_token_value(tokens[0]);
        if (declared == 0 || tokens[0].front() != '#')
            throw FormatError(expected_index, "step must begin with '#<index>'");
        if (declared < expected_index)
            throw FormatError(declared, "duplicate step index");
        if (declared > expected_index)
            throw FormatError(declared, "gap in step indexes (expected #" +
                                            std::to_string(expected_index) + ")");

        // Payload tokens, with at most one trailing reference.
        size_t ref_count = 0;
        for (size_t i = 1; i < tokens.size(); ++i)
            if (ref_token_value(tokens[i]) > 0) ++ref_count;
        if (ref_count > 1) throw FormatError(declared, "multiple references in one step");

        std::vector<std::string> payload;
        int ref = 0;
        for (size_t i = 1; i < tokens.size(); ++i) {
            int r = ref_token_value(tokens[i]);
            if (r > 0) {
                if (i + 1 != tokens.size())
                    throw FormatError(declared, "reference must be the last token");
                ref = r;
            } else {
                if (tokens[i].find('#') != std::string::npos)
                    throw FormatError(declared, "stray '#' in payload");
                payload.push_back(tokens[i]);
            }
        }
        if (payload.empty() && ref == 0) throw FormatError(declared, "empty payload");
        if (ref >= declared) throw FormatError(declared, "forward reference to #" + std::to_string(ref));

        DecompStep step;
        step.index = declared;
        if (ref != 0 && payload.size() == 1 && payload[0] == "COUNT") {
            step.kind = AggregateStep{StepRef{ref}};
        } else if (ref != 0 && !payload.empty() && payload[0] == "COUNT") {
            throw FormatError(declared, "COUNT step must not carry extra payload");
        } else if (ref != 0) {
            if (payload.empty()) throw FormatError(declared, "empty payload");
            step.kind = HopStep{join(payload, 0, payload.size()), StepRef{ref}};
        } else {
            step.kind = AnchorStep{join(payload, 0, payload.size())};
        }
        d.steps.push_back(std::move(step));
        ++expected_index;
    }
    return d;
}

std::string serialize(const Decomposition& d) {
    std::string out;
    for (const auto& step : d.steps) {
        if (!out.empty()) out += " ; ";
        out += "#" + std::to_string(step.index) + " ";
        if (const auto* a = std::get_if<AnchorStep>(&step.kind)) {
            out += text::collapse_ws(a->text);
        } else if (const auto* h = std::get_if<HopStep>(&step.kind)) {
            out += text::collapse_ws(h->phrase) + " #" + std::to_string(h->ref.index);
        } else {
            const auto& agg = std::get<AggregateStep>(step.kind);
            out += "COUNT #" + std::to_string(agg.ref.index);
        }
    }
    return out;
}

std::vector<Violation> validate(const Decomposition& d) {
    std::vector<Violation> out;
    const int n = static_cast<int>(d.steps.size());
    if (n < 2) out.push_back({0, "decomposition must have at least 2 steps"});
    for (int i = 0; i < n; ++i) {
        if (d.steps[i].index != i + 1) {
            out.push_back({d.steps[i].index, "step indexes must run 1..n in order"});
            return out; // later checks assume positional indexing
        }
    }
    if (n >= 1 && !std::holds_alternative<AnchorStep>(d.steps[0].kind))
        out.push_back({1, "step 1 must be an Anchor"});

    std::vector<bool> referenced(static_cast<size_t>(n) + 1, false);
    for (const auto& step : d.steps) {
        const StepRef* ref = nullptr;
        if (const auto* h = std::get_if<HopStep>(&step.kind)) {
            ref = &h->ref;
            if (text::trim(h->phrase).empty())
                out.push_back({step.index, "hop phrase must be non-empty"});
        } else if (const auto* a = std::get_if<AggregateStep>(&step.kind)) {
            ref = &a->ref;
        } else {
            const auto& anchor = std::get<AnchorStep>(step.kind);
            if (text::trim(anchor.text).empty())
                out.push_back({step.index, "anchor text must be non-empty"});
        }
        if (ref) {
            if (ref->index < 1 || ref->index > n)
                out.push_back({step.index, "reference to missing step #" +
                                               std::to_string(ref->index)});
            else if (ref->index >= step.index)
                out.push_back({step.index, "reference must point to an earlier step"});
            else
                referenced[static_cast<size_t>(ref->index)] = true;
        }
    }
    for (int i = 1; i < n; ++i) { // every non-final step except extra anchors
        const auto& step = d.steps[static_cast<size_t>(i) - 1];
        if (std::holds_alternative<AnchorStep>(step.kind)) continue;
        if (!referenced[static_cast<size_t>(i)])
            out.push_back({i, "step " + std::to_string(i) + " unused"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset loader

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "train";
}

size_t DatasetLoad::count(Split s) const {
    return static_cast<size_t>(
        std::count_if(records.begin(), records.end(),
                      [&](const DatasetRecord& r) { return r.split == s; }));
}

namespace {

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    throw Error("unknown split '" + s + "'");
}

DatasetRecord parse_record(const json& j) {
    if (!j.is_object()) throw Error("record must be a JSON object");
    DatasetRecord r;
    for (const char* key : {"id", "question", "decomposition", "split"}) {
        if (!j.contains(key) || !j[key].is_string())
            throw Error(std::string("missing string field '") + key + "'");
    }
    r.id = j["id"].get<std::string>();
    r.question = text::nfc(j["question"].get<std::string>());
    r.gold_decomposition = parse_decomposition(j["decomposition"].get<std::string>());
    r.split = parse_split(j["split"].get<std::string>());
    if (j.contains("entities")) {
        for (const auto& e : j["entities"]) {
            if (!e.is_object() || !e.contains("mention") || !e.contains("iri"))
                throw Error("entities entries must carry mention and iri");
            r.gold_entities.emplace_back(text::nfc(e["mention"].get<std::string>()),
                                         Iri(e["iri"].get<std::string>()));
        }
    }
    if (j.contains("relations"))
        for (const auto& rel : j["relations"])
            r.gold_relations.push_back(text::nfc(rel.get<std::string>()));
    if (j.contains("answers"))
        for (const auto& a : j["answers"])
            r.gold_answers.push_back(text::nfc(a.get<std::string>()));
    if (r.split == Split::Test && r.gold_answers.empty())
        throw Error("test records must carry at least one answer");
    return r;
}

} // namespace

DatasetLoad load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    DatasetLoad out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            out.records.push_back(parse_record(j));
        } catch (const json::exception& e) {
            out.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
        } catch (const Error& e) {
            out.errors.push_back({line_no, e.what()});
        }
    }
    return out;
}

} // namespace kgqa::mrdcpq
