#include <kgqa/kg_store.hpp>
#include <kgqa/text.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace kgqa {

namespace {

bool has_forbidden_iri_char(std::string_view v) {
    for (char c : v) {
        if (c == '<' || c == '>' || c == '"' || c == ' ' || c == '\t' ||
            c == '\n' || c == '\r')
            return true;
    }
    return false;
}

// Sort key for a literal: lexical, then lang, then datatype.
std::tuple<const std::string&, std::string, std::string>
literal_key(const Literal& l) {
    return {l.lexical, l.lang.value_or(""),
            l.datatype ? l.datatype->value : std::string()};
}

} // namespace

Iri::Iri(std::string v) : value(text::nfc(v)) {
    if (value.empty()) throw Error("IRI must be non-empty");
    if (has_forbidden_iri_char(value))
        throw Error("IRI contains whitespace or angle brackets: " + value);
}

Literal Literal::plain(std::string lexical) {
    Literal l;
    l.lexical = text::nfc(lexical);
    return l;
}

Literal Literal::with_lang(std::string lexical, std::string lang) {
    Literal l;
    l.lexical = text::nfc(lexical);
    l.lang = std::move(lang);
    return l;
}

Literal Literal::typed(std::string lexical, Iri datatype) {
    Literal l;
    l.lexical = text::nfc(lexical);
    l.datatype = std::move(datatype);
    return l;
}

bool node_less(const Node& a, const Node& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    if (std::holds_alternative<Iri>(a))
        return std::get<Iri>(a) < std::get<Iri>(b);
    return literal_key(std::get<Literal>(a)) < literal_key(std::get<Literal>(b));
}

bool node_eq(const Node& a, const Node& b) {
    return !node_less(a, b) && !node_less(b, a);
}

std::string node_string(const Node& n) {
    if (std::holds_alternative<Iri>(n)) return std::get<Iri>(n).value;
    return std::get<Literal>(n).lexical;
}

bool Triple::operator==(const Triple& other) const {
    return subject == other.subject && predicate == other.predicate &&
           node_eq(object, other.object);
}

bool spo_less(const Triple& a, const Triple& b) {
    if (a.subject != b.subject) return a.subject < b.subject;
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    return node_less(a.object, b.object);
}

bool pos_less(const Triple& a, const Triple& b) {
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    if (node_less(a.object, b.object)) return true;
    if (node_less(b.object, a.object)) return false;
    return a.subject < b.subject;
}

bool osp_less(const Triple& a, const Triple& b) {
    if (node_less(a.object, b.object)) return true;
    if (node_less(b.object, a.object)) return false;
    if (a.subject != b.subject) return a.subject < b.subject;
    return a.predicate < b.predicate;
}

// ---------------------------------------------------------------------------
// N-Triples subset parser

MalformedLine::MalformedLine(size_t line, const std::string& reason)
    : Error("line " + std::to_string(line) + ": " + reason), line(line) {}

namespace {

struct LineParser {
    std::string_view s;
    size_t pos = 0;
    size_t line_no;

    explicit LineParser(std::string_view line, size_t line_no)
        : s(line), line_no(line_no) {}

    [[noreturn]] void fail(const std::string& reason) const {
        throw MalformedLine(line_no, reason);
    }

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= s.size();
    }

    Iri parse_iri() {
        skip_ws();
        if (pos >= s.size() || s[pos] != '<') fail("expected '<'");
        size_t end = s.find('>', pos + 1);
        if (end == std::string_view::npos) fail("unbalanced '<'");
        std::string value(s.substr(pos + 1, end - pos - 1));
        pos = end + 1;
        try {
            return Iri(value);
        } catch (const Error& e) {
            fail(e.what());
        }
    }

    std::string parse_quoted() {
        // Caller has checked s[pos] == '"'.
        ++pos;
        std::string out;
        while (true) {
            if (pos >= s.size()) fail("unbalanced quote");
            char c = s[pos];
            if (c == '"') {
                ++pos;
                return out;
            }
            if (c == '\\') {
                if (pos + 1 >= s.size()) fail("dangling escape");
                char e = s[pos + 1];
                pos += 2;
                switch (e) {
                    case 't': out.push_back('\t'); break;
                    case 'n': out.push_back('\n'); break;
                    case 'r': out.push_back('\r'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    case 'u':
                    case 'U': {
                        const size_t ndigits = (e == 'u') ? 4 : 8;
                        if (pos + ndigits > s.size()) fail("truncated \\u escape");
                        char32_t cp = 0;
                        for (size_t i = 0; i < ndigits; ++i) {
                            char h = s[pos + i];
                            cp <<= 4;
                            if (h >= '0' && h <= '9') cp |= h - '0';
                            else if (h >= 'a' && h <= 'f') cp |= h - 'a' + 10;
                            else if (h >= 'A' && h <= 'F') cp |= h - 'A' + 10;
                            else fail("bad hex digit in \\u escape");
                        }
                        pos += ndigits;
                        out += text::encode_utf8(std::u32string(1, cp));
                        break;
                    }
                    default: fail(std::string("unknown escape \\") + e);
                }
                continue;
            }
            out.push_back(c);
            ++pos;
        }
    }

    Node parse_object() {
        skip_ws();
        if (pos >= s.size()) fail("missing object");
        if (s[pos] == '<') return parse_iri();
        if (s[pos] != '"') fail("object must be an IRI or a quoted literal");
        std::string lexical = parse_quoted();
        std::optional<std::string> lang;
        std::optional<Iri> datatype;
        if (pos < s.size() && s[pos] == '@') {
            size_t start = ++pos;
            while (pos < s.size() && (isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '-'))
                ++pos;
            if (pos == start) fail("empty language tag");
            lang = std::string(s.substr(start, pos - start));
        }
        if (pos + 1 < s.size() && s[pos] == '^' && s[pos + 1] == '^') {
            pos += 2;
            datatype = parse_iri();
        }
        if (lang && datatype) fail("literal carries both language tag and datatype");
        if (lang) return Literal::with_lang(std::move(lexical), std::move(*lang));
        if (datatype) return Literal::typed(std::move(lexical), std::move(*datatype));
        return Literal::plain(std::move(lexical));
    }

    Triple parse_statement() {
        Iri subject = parse_iri();
        Iri predicate = parse_iri();
        Node object = parse_object();
        skip_ws();
        if (pos >= s.size() || s[pos] != '.') fail("missing terminal '.'");
        ++pos;
        if (!at_end()) fail("trailing content after '.'");
        return Triple{std::move(subject), std::move(predicate), std::move(object)};
    }
};

std::string escape_literal(const std::string& lexical) {
    std::string out;
    out.reserve(lexical.size());
    for (char c : lexical) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::vector<Triple> parse_ntriples(std::string_view textdoc) {
    if (!text::decode_utf8(textdoc))
        throw MalformedLine(0, "document is not valid UTF-8");
    std::vector<Triple> out;
    size_t line_no = 0;
    size_t start = 0;
    while (start <= textdoc.size()) {
        size_t nl = textdoc.find('\n', start);
        std::string_view line = textdoc.substr(
            start, nl == std::string_view::npos ? textdoc.size() - start : nl - start);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string trimmed = text::trim(line);
        if (!trimmed.empty() && trimmed[0] != '#') {
            LineParser parser(line, line_no);
            out.push_back(parser.parse_statement());
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

std::string serialize_ntriples(const std::vector<Triple>& triples) {
    std::ostringstream out;
    for (const auto& t : triples) {
        out << '<' << t.subject.value << "> <" << t.predicate.value << "> ";
        if (std::holds_alternative<Iri>(t.object)) {
            out << '<' << std::get<Iri>(t.object).value << '>';
        } else {
            const auto& l = std::get<Literal>(t.object);
            out << '"' << escape_literal(l.lexical) << '"';
            if (l.lang) out << '@' << *l.lang;
            if (l.datatype) out << "^^<" << l.datatype->value << '>';
        }
        out << " .\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

KnowledgeGraph::KnowledgeGraph()
    : KnowledgeGraph(Iri(kDefaultLabelPredicate), Iri(kDefaultAbstractPredicate)) {}

KnowledgeGraph::KnowledgeGraph(Iri label_predicate, Iri abstract_predicate)
    : spo_(&spo_less),
      pos_(&pos_less),
      osp_(&osp_less),
      label_predicate_(std::move(label_predicate)),
      abstract_predicate_(std::move(abstract_predicate)) {}

void KnowledgeGraph::insert(Triple t) {
    if (frozen_) throw std::logic_error("insert into frozen graph");
    predicate_iris_.insert(t.predicate);
    if (t.predicate == label_predicate_ && std::holds_alternative<Literal>(t.object))
        label_index_[t.subject].insert(std::get<Literal>(t.object).lexical);
    if (t.predicate == abstract_predicate_ && std::holds_alternative<Literal>(t.object))
        abstract_index_[t.subject].insert(std::get<Literal>(t.object).lexical);
    spo_.insert(t);
    pos_.insert(t);
    osp_.insert(std::move(t));
}

void KnowledgeGraph::freeze() { frozen_ = true; }

void KnowledgeGraph::register_predicate(const Iri& p) {
    if (frozen_) throw std::logic_error("register_predicate on frozen graph");
    predicate_iris_.insert(p);
}

std::vector<Triple> KnowledgeGraph::match_pattern(const std::optional<Iri>& s,
                                                  const std::optional<Iri>& p,
                                                  const std::optional<Node>& o) const {
    std::vector<Triple> out;
    auto keep = [&](const Triple& t) {
        if (s && t.subject != *s) return;
        if (p && t.predicate != *p) return;
        if (o && !node_eq(t.object, *o)) return;
        out.push_back(t);
    };

    // Pick the index whose order starts with the bound positions, then walk
    // only the matching prefix range.
    if (s) {
        auto it = spo_.lower_bound(Triple{*s, Iri{}, Iri{}});
        for (; it != spo_.end() && it->subject == *s; ++it) keep(*it);
    } else if (p) {
        Triple probe{Iri{}, *p, Iri{}};
        auto it = pos_.lower_bound(probe);
        for (; it != pos_.end() && it->predicate == *p; ++it) keep(*it);
        std::sort(out.begin(), out.end(), &spo_less);
    } else if (o) {
        Triple probe{Iri{}, Iri{}, *o};
        auto it = osp_.lower_bound(probe);
        for (; it != osp_.end() && node_eq(it->object, *o); ++it) keep(*it);
        std::sort(out.begin(), out.end(), &spo_less);
    } else {
        out.assign(spo_.begin(), spo_.end());
    }
    return out;
}

const std::set<std::string>& KnowledgeGraph::labels_of(const Iri& entity) const {
    static const std::set<std::string> kEmpty;
    auto it = label_index_.find(entity);
    return it == label_index_.end() ? kEmpty : it->second;
}

std::optional<std::string> KnowledgeGraph::abstract_of(const Iri& entity) const {
    auto it = abstract_index_.find(entity);
    if (it == abstract_index_.end() || it->second.empty()) return std::nullopt;
    return *it->second.begin(); // lexicographically smallest when several
}

std::vector<Iri> KnowledgeGraph::labeled_entities() const {
    std::vector<Iri> out;
    for (const auto& [iri, labels] : label_index_) {
        if (!labels.empty() && !predicate_iris_.contains(iri)) out.push_back(iri);
    }
    return out;
}

std::vector<Iri> KnowledgeGraph::labeled_predicates() const {
    std::vector<Iri> out;
    for (const auto& p : predicate_iris_) {
        if (!labels_of(p).empty()) out.push_back(p);
    }
    return out;
}

std::vector<Triple> KnowledgeGraph::all_triples() const {
    return {spo_.begin(), spo_.end()};
}

KnowledgeGraph load_graph_file(const std::string& path, Iri label_predicate,
                               Iri abstract_predicate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    KnowledgeGraph kg(std::move(label_predicate), std::move(abstract_predicate));
    for (auto& t : parse_ntriples(buf.str())) kg.insert(std::move(t));
    kg.freeze();
    return kg;
}

} // namespace kgqa
