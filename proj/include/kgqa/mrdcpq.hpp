#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <kgqa/kg_store.hpp>

namespace kgqa::mrdcpq {

/// Backward reference to an earlier step (`#1`, `#2`, ...).
struct StepRef {
    int index = 0;
    auto operator<=>(const StepRef&) const = default;
};

/// Step #1-style topic entity mention.
struct AnchorStep {
    std::string text;
    auto operator<=>(const AnchorStep&) const = default;
};

/// Relation traversal chained off an earlier step.
struct HopStep {
    std::string phrase;
    StepRef ref;
    auto operator<=>(const HopStep&) const = default;
};

/// Terminal COUNT over an earlier step (the only aggregate in scope).
struct AggregateStep {
    StepRef ref;
    auto operator<=>(const AggregateStep&) const = default;
};

struct DecompStep {
    int index = 0;
    std::variant<AnchorStep, HopStep, AggregateStep> kind;
    auto operator<=>(const DecompStep&) const = default;
};

/// An ordered chain of decomposition steps with indexes 1..n.
struct Decomposition {
    std::vector<DecompStep> steps;
    auto operator<=>(const Decomposition&) const = default;
};

struct FormatError : Error {
    int step_index;
    FormatError(int step_index, const std::string& reason);
};

/// Parses the canonical format `#1 payload ; #2 payload #1 ; ...`. A step
/// whose payload is the keyword COUNT plus a reference is an Aggregate, a
/// step carrying a reference is a Hop, a reference-less step is an Anchor.
/// References render as `#1` (canonical) or `1#` (the right-to-left
/// typesetting variant); both are accepted.
Decomposition parse_decomposition(std::string_view text);

/// Canonical, whitespace-normalized form. parse(serialize(d)) == d.
std::string serialize(const Decomposition& d);

struct Violation {
    int step_index; // 0 for whole-decomposition violations
    std::string message;
    bool operator==(const Violation&) const = default;
};

/// Checks the chain invariants: at least two steps, step 1 is an Anchor,
/// references point backward to existing steps, and every non-final hop or
/// aggregate is referenced by a later step. Extra anchors are allowed here
/// (multi-entity questions exist) and are rejected later, at compilation.
std::vector<Violation> validate(const Decomposition& d);

enum class Split { Train, Dev, Test };

std::string split_name(Split s);

struct DatasetRecord {
    std::string id;
    std::string question;
    Decomposition gold_decomposition;
    std::vector<std::pair<std::string, Iri>> gold_entities; // (mention, iri)
    std::vector<std::string> gold_relations;
    std::vector<std::string> gold_answers;
    Split split = Split::Train;
};

struct RecordError {
    size_t line;
    std::string reason;
};

struct DatasetLoad {
    std::vector<DatasetRecord> records;
    std::vector<RecordError> errors;

    size_t count(Split s) const;
};

/// Loads a JSON Lines dataset. Bad records are collected in `errors` and
/// loading continues; an unreadable file throws IoError.
DatasetLoad load_dataset(const std::string& path);

} // namespace kgqa::mrdcpq
