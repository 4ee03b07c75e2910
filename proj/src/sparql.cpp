#include <kgqa/sparql.hpp>
#include <kgqa/text.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include <json.hpp>

namespace kgqa::sparql {

using json = nlohmann::json;

SyntaxError::SyntaxError(size_t position, const std::string& expected)
    : Error("syntax error at offset " + std::to_string(position) + ": expected " +
            expected),
      position(position),
      expected(expected) {}

UnsupportedFeature::UnsupportedFeature(size_t position, const std::string& feature)
    : Error("unsupported feature at offset " + std::to_string(position) + ": " +
            feature),
      position(position),
      feature(feature) {}

bool term_eq(const Term& a, const Term& b) {
    if (a.index() != b.index()) return false;
    if (std::holds_alternative<Var>(a)) return std::get<Var>(a) == std::get<Var>(b);
    if (std::holds_alternative<Iri>(a)) return std::get<Iri>(a) == std::get<Iri>(b);
    return std::get<Literal>(a) == std::get<Literal>(b);
}

bool query_eq(const SelectQuery& a, const SelectQuery& b) {
    if (a.distinct != b.distinct || a.projection != b.projection) return false;
    if (a.count.has_value() != b.count.has_value()) return false;
    if (a.count && (a.count->counted != b.count->counted ||
                    a.count->distinct != b.count->distinct || a.count->as != b.count->as))
        return false;
    if (a.where.size() != b.where.size()) return false;
    for (size_t i = 0; i < a.where.size(); ++i) {
        if (!term_eq(a.where[i].subject, b.where[i].subject) ||
            !term_eq(a.where[i].predicate, b.where[i].predicate) ||
            !term_eq(a.where[i].object, b.where[i].object))
            return false;
    }
    return true;
}

bool ResultTable::operator==(const ResultTable& other) const {
    if (vars != other.vars || rows.size() != other.rows.size()) return false;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != other.rows[i].size()) return false;
        for (size_t j = 0; j < rows[i].size(); ++j)
            if (!node_eq(rows[i][j], other.rows[i][j])) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class TokKind { Keyword, Variable, IriRef, LiteralTok, LParen, RParen, LBrace, RBrace, Dot, End };

struct Token {
    TokKind kind = TokKind::End;
    size_t pos = 0;
    std::string text;            // keyword (upper-cased) or var name
    Literal literal;             // for LiteralTok
    std::string iri;             // for IriRef
};

Token make_token(TokKind kind, size_t pos, std::string text = {}) {
    Token t;
    t.kind = kind;
    t.pos = pos;
    t.text = std::move(text);
    return t;
}

const char* kUnsupported[] = {"PREFIX", "FILTER", "OPTIONAL", "UNION",  "LIMIT",
                              "ORDER",  "GROUP",  "HAVING",   "OFFSET", "ASK",
                              "CONSTRUCT", "DESCRIBE", "BASE"};

struct Lexer {
    std::string_view s;
    size_t pos = 0;

    explicit Lexer(std::string_view text) : s(text) {}

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    Token next() {
        skip_ws();
        if (pos >= s.size()) return make_token(TokKind::End, pos);
        size_t start = pos;
        char c = s[pos];
        switch (c) {
            case '(': ++pos; return make_token(TokKind::LParen, start, "(");
            case ')': ++pos; return make_token(TokKind::RParen, start, ")");
            case '{': ++pos; return make_token(TokKind::LBrace, start, "{");
            case '}': ++pos; return make_token(TokKind::RBrace, start, "}");
            case '.': ++pos; return make_token(TokKind::Dot, start, ".");
            default: break;
        }
        if (c == '?' || c == '$') {
            ++pos;
            size_t b = pos;
            if (pos >= s.size() ||
                !(std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                throw SyntaxError(start, "variable name after '?'");
            ++pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            return make_token(TokKind::Variable, start, std::string(s.substr(b, pos - b)));
        }
        if (c == '<') {
            size_t end = s.find('>', pos + 1);
            if (end == std::string_view::npos) throw SyntaxError(start, "closing '>'");
            Token t = make_token(TokKind::IriRef, start);
            t.iri = std::string(s.substr(pos + 1, end - pos - 1));
            pos = end + 1;
            return t;
        }
        if (c == '"') return lex_literal(start);
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t b = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            std::string word(s.substr(b, pos - b));
            std::string upper = word;
            std::transform(upper.begin(), upper.end(), upper.begin(),
                           [](unsigned char ch) { return std::toupper(ch); });
            for (const char* u : kUnsupported)
                if (upper == u) throw UnsupportedFeature(start, u);
            return make_token(TokKind::Keyword, start, std::move(upper));
        }
        throw SyntaxError(start, "token");
    }

    Token lex_literal(size_t start) {
        ++pos; // opening quote
        std::string lexical;
        while (true) {
            if (pos >= s.size()) throw SyntaxError(start, "closing '\"'");
            char c = s[pos];
            if (c == '"') { ++pos; break; }
            if (c == '\\') {
                if (pos + 1 >= s.size()) throw SyntaxError(pos, "escape");
                char e = s[pos + 1];
                pos += 2;
                switch (e) {
                    case 't': lexical.push_back('\t'); break;
                    case 'n': lexical.push_back('\n'); break;
                    case 'r': lexical.push_back('\r'); break;
                    case '"': lexical.push_back('"'); break;
                    case '\\': lexical.push_back('\\'); break;
                    default: throw SyntaxError(pos - 1, "escape");
                }
                continue;
            }
            lexical.push_back(c);
            ++pos;
        }
        Token t = make_token(TokKind::LiteralTok, start);
        if (pos < s.size() && s[pos] == '@') {
            size_t b = ++pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '-'))
                ++pos;
            if (pos == b) throw SyntaxError(b, "language tag");
            t.literal = Literal::with_lang(lexical, std::string(s.substr(b, pos - b)));
            return t;
        }
        if (pos + 1 < s.size() && s[pos] == '^' && s[pos + 1] == '^') {
            pos += 2;
            if (pos >= s.size() || s[pos] != '<') throw SyntaxError(pos, "datatype IRI");
            size_t end = s.find('>', pos + 1);
            if (end == std::string_view::npos) throw SyntaxError(pos, "closing '>'");
            t.literal = Literal::typed(lexical, Iri(std::string(s.substr(pos + 1, end - pos - 1))));
            pos = end + 1;
            return t;
        }
        t.literal = Literal::plain(lexical);
        return t;
    }
};

struct Parser {
    Lexer lexer;
    Token tok;

    explicit Parser(std::string_view text) : lexer(text) { tok = lexer.next(); }

    void advance() { tok = lexer.next(); }

    void expect_keyword(const std::string& kw) {
        if (tok.kind != TokKind::Keyword || tok.text != kw)
            throw SyntaxError(tok.pos, kw);
        advance();
    }

    bool accept_keyword(const std::string& kw) {
        if (tok.kind == TokKind::Keyword && tok.text == kw) {
            advance();
            return true;
        }
        return false;
    }

    Var parse_var() {
        if (tok.kind != TokKind::Variable) throw SyntaxError(tok.pos, "variable");
        Var v{tok.text};
        advance();
        return v;
    }

    Term parse_term(bool allow_literal) {
        switch (tok.kind) {
            case TokKind::Variable: {
                Var v{tok.text};
                advance();
                return v;
            }
            case TokKind::IriRef: {
                Iri iri(tok.iri);
                advance();
                return iri;
            }
            case TokKind::LiteralTok: {
                if (!allow_literal)
                    throw SyntaxError(tok.pos, "IRI or variable (literals only in object position)");
                Literal l = tok.literal;
                advance();
                return l;
            }
            default:
                throw SyntaxError(tok.pos, allow_literal ? "term" : "IRI or variable");
        }
    }

    SelectQuery parse() {
        SelectQuery q;
        expect_keyword("SELECT");
        q.distinct = accept_keyword("DISTINCT");
        if (tok.kind == TokKind::LParen) {
            advance();
            expect_keyword("COUNT");
            if (tok.kind != TokKind::LParen) throw SyntaxError(tok.pos, "(");
            advance();
            CountSpec count;
            count.distinct = accept_keyword("DISTINCT");
            count.counted = parse_var();
            if (tok.kind != TokKind::RParen) throw SyntaxError(tok.pos, ")");
            advance();
            expect_keyword("AS");
            count.as = parse_var();
            if (tok.kind != TokKind::RParen) throw SyntaxError(tok.pos, ")");
            advance();
            q.count = std::move(count);
        } else {
            while (tok.kind == TokKind::Variable) q.projection.push_back(parse_var());
            if (q.projection.empty()) throw SyntaxError(tok.pos, "projection");
        }
        expect_keyword("WHERE");
        if (tok.kind != TokKind::LBrace) throw SyntaxError(tok.pos, "{");
        advance();
        while (tok.kind != TokKind::RBrace) {
            TriplePattern p;
            p.subject = parse_term(false);
            p.predicate = parse_term(false);
            p.object = parse_term(true);
            if (tok.kind != TokKind::Dot) throw SyntaxError(tok.pos, ".");
            advance();
            q.where.push_back(std::move(p));
        }
        advance(); // '}'
        if (tok.kind != TokKind::End) throw SyntaxError(tok.pos, "end of query");
        if (q.where.empty()) throw SyntaxError(0, "at least one triple pattern");

        // Every projected / counted variable must occur in the BGP.
        auto in_where = [&](const Var& v) {
            for (const auto& p : q.where) {
                for (const Term* t : {&p.subject, &p.predicate, &p.object})
                    if (std::holds_alternative<Var>(*t) && std::get<Var>(*t) == v)
                        return true;
            }
            return false;
        };
        if (q.count) {
            if (!in_where(q.count->counted))
                throw SyntaxError(0, "counted variable to occur in WHERE");
        } else {
            for (const auto& v : q.projection)
                if (!in_where(v))
                    throw SyntaxError(0, "projected variable ?" + v.name + " to occur in WHERE");
        }
        return q;
    }
};

std::string escape_literal(const std::string& lexical) {
    std::string out;
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

std::string term_text(const Term& t) {
    if (std::holds_alternative<Var>(t)) return "?" + std::get<Var>(t).name;
    if (std::holds_alternative<Iri>(t)) return "<" + std::get<Iri>(t).value + ">";
    const auto& l = std::get<Literal>(t);
    std::string out = "\"" + escape_literal(l.lexical) + "\"";
    if (l.lang) out += "@" + *l.lang;
    if (l.datatype) out += "^^<" + l.datatype->value + ">";
    return out;
}

} // namespace

SelectQuery parse_select(std::string_view textq) {
    Parser parser(textq);
    return parser.parse();
}

std::string serialize_query(const SelectQuery& q) {
    std::ostringstream out;
    out << "SELECT ";
    if (q.distinct) out << "DISTINCT ";
    if (q.count) {
        out << "(COUNT(" << (q.count->distinct ? "DISTINCT " : "") << '?'
            << q.count->counted.name << ") AS ?" << q.count->as.name << ") ";
    } else {
        for (const auto& v : q.projection) out << '?' << v.name << ' ';
    }
    out << "WHERE { ";
    for (const auto& p : q.where)
        out << term_text(p.subject) << ' ' << term_text(p.predicate) << ' '
            << term_text(p.object) << " . ";
    out << '}';
    return out.str();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

using Binding = std::map<std::string, Node>;

// Substitutes bound variables, then matches against the store. Repeated
// variables inside one pattern are checked by extend().
std::vector<Triple> pattern_matches(const KnowledgeGraph& kg, const TriplePattern& p,
                                    const Binding& b) {
    std::optional<Iri> s, pr;
    std::optional<Node> o;
    if (std::holds_alternative<Iri>(p.subject)) s = std::get<Iri>(p.subject);
    else if (auto it = b.find(std::get<Var>(p.subject).name); it != b.end()) {
        if (!std::holds_alternative<Iri>(it->second)) return {}; // literal subject: no match
        s = std::get<Iri>(it->second);
    }
    if (std::holds_alternative<Iri>(p.predicate)) pr = std::get<Iri>(p.predicate);
    else if (auto it = b.find(std::get<Var>(p.predicate).name); it != b.end()) {
        if (!std::holds_alternative<Iri>(it->second)) return {};
        pr = std::get<Iri>(it->second);
    }
    if (std::holds_alternative<Iri>(p.object)) o = Node(std::get<Iri>(p.object));
    else if (std::holds_alternative<Literal>(p.object)) o = Node(std::get<Literal>(p.object));
    else if (auto it = b.find(std::get<Var>(p.object).name); it != b.end()) o = it->second;
    return kg.match_pattern(s, pr, o);
}

bool extend(Binding& b, const Term& t, const Node& value) {
    if (!std::holds_alternative<Var>(t)) return true; // constants matched already
    const auto& name = std::get<Var>(t).name;
    auto it = b.find(name);
    if (it != b.end()) return node_eq(it->second, value);
    b.emplace(name, value);
    return true;
}

bool row_less(const std::vector<Node>& a, const std::vector<Node>& b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (node_less(a[i], b[i])) return true;
        if (node_less(b[i], a[i])) return false;
    }
    return a.size() < b.size();
}

bool row_eq(const std::vector<Node>& a, const std::vector<Node>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!node_eq(a[i], b[i])) return false;
    return true;
}

void sort_dedupe(std::vector<std::vector<Node>>& rows, bool dedupe) {
    std::sort(rows.begin(), rows.end(), &row_less);
    if (dedupe) rows.erase(std::unique(rows.begin(), rows.end(), &row_eq), rows.end());
}

std::vector<std::string> pattern_vars(const TriplePattern& p) {
    std::vector<std::string> out;
    for (const Term* t : {&p.subject, &p.predicate, &p.object})
        if (std::holds_alternative<Var>(*t)) out.push_back(std::get<Var>(*t).name);
    return out;
}

} // namespace

ResultTable evaluate(const KnowledgeGraph& kg, const SelectQuery& q) {
    // Pattern-at-a-time join. The next pattern is the cheapest remaining one
    // (by match cardinality against the store), preferring patterns that share
    // a variable with what is already bound so cross products stay rare.
    const size_t n = q.where.size();
    std::vector<size_t> cardinality(n);
    for (size_t i = 0; i < n; ++i)
        cardinality[i] = pattern_matches(kg, q.where[i], {}).size();

    std::vector<bool> used(n, false);
    std::vector<std::string> bound_vars;
    std::vector<size_t> order;
    for (size_t step = 0; step < n; ++step) {
        size_t best = n;
        bool best_connected = false;
        for (size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            bool connected = false;
            for (const auto& v : pattern_vars(q.where[i]))
                if (std::find(bound_vars.begin(), bound_vars.end(), v) != bound_vars.end())
                    connected = true;
            if (best == n || std::pair(!connected, cardinality[i]) <
                                 std::pair(!best_connected, cardinality[best])) {
                best = i;
                best_connected = connected;
            }
        }
        used[best] = true;
        order.push_back(best);
        for (const auto& v : pattern_vars(q.where[best]))
            if (std::find(bound_vars.begin(), bound_vars.end(), v) == bound_vars.end())
                bound_vars.push_back(v);
    }

    std::vector<Binding> solutions{Binding{}};
    for (size_t idx : order) {
        const auto& p = q.where[idx];
        std::vector<Binding> next;
        for (const auto& sol : solutions) {
            for (const auto& t : pattern_matches(kg, p, sol)) {
                Binding b = sol;
                if (extend(b, p.subject, Node(t.subject)) &&
                    extend(b, p.predicate, Node(t.predicate)) &&
                    extend(b, p.object, t.object))
                    next.push_back(std::move(b));
            }
        }
        solutions = std::move(next);
        if (solutions.empty()) break;
    }

    ResultTable table;
    if (q.count) {
        std::vector<std::vector<Node>> values;
        values.reserve(solutions.size());
        for (const auto& sol : solutions)
            values.push_back({sol.at(q.count->counted.name)});
        sort_dedupe(values, q.count->distinct);
        table.vars = {q.count->as};
        table.rows = {{Node(Literal::typed(std::to_string(values.size()), Iri(kXsdInteger)))}};
        return table;
    }
    table.vars = q.projection;
    table.rows.reserve(solutions.size());
    for (const auto& sol : solutions) {
        std::vector<Node> row;
        row.reserve(q.projection.size());
        for (const auto& v : q.projection) row.push_back(sol.at(v.name));
        table.rows.push_back(std::move(row));
    }
    sort_dedupe(table.rows, q.distinct);
    return table;
}

// ---------------------------------------------------------------------------
// Results JSON

std::string serialize_results(const ResultTable& t) {
    json head_vars = json::array();
    for (const auto& v : t.vars) head_vars.push_back(v.name);
    json bindings = json::array();
    for (const auto& row : t.rows) {
        json b = json::object();
        for (size_t i = 0; i < t.vars.size(); ++i) {
            const Node& n = row[i];
            json cell;
            if (std::holds_alternative<Iri>(n)) {
                cell["type"] = "uri";
                cell["value"] = std::get<Iri>(n).value;
            } else {
                const auto& l = std::get<Literal>(n);
                cell["type"] = "literal";
                cell["value"] = l.lexical;
                if (l.lang) cell["xml:lang"] = *l.lang;
                if (l.datatype) cell["datatype"] = l.datatype->value;
            }
            b[t.vars[i].name] = std::move(cell);
        }
        bindings.push_back(std::move(b));
    }
    json doc;
    doc["head"]["vars"] = std::move(head_vars);
    doc["results"]["bindings"] = std::move(bindings);
    return doc.dump();
}

ResultTable parse_results(std::string_view jtext) {
    json doc = json::parse(jtext, nullptr, false);
    if (doc.is_discarded()) throw MalformedResponse("response is not valid JSON");
    if (!doc.is_object() || !doc.contains("head") || !doc["head"].contains("vars") ||
        !doc["head"]["vars"].is_array() || !doc.contains("results") ||
        !doc["results"].contains("bindings") || !doc["results"]["bindings"].is_array())
        throw MalformedResponse("missing head.vars or results.bindings");

    ResultTable t;
    for (const auto& v : doc["head"]["vars"]) {
        if (!v.is_string()) throw MalformedResponse("head.vars entries must be strings");
        t.vars.push_back(Var{v.get<std::string>()});
    }
    for (const auto& b : doc["results"]["bindings"]) {
        if (!b.is_object()) throw MalformedResponse("binding must be an object");
        std::vector<Node> row;
        for (const auto& v : t.vars) {
            if (!b.contains(v.name))
                throw MalformedResponse("binding missing variable " + v.name);
            const auto& cell = b[v.name];
            if (!cell.is_object() || !cell.contains("type") || !cell.contains("value") ||
                !cell["value"].is_string())
                throw MalformedResponse("binding cell missing type/value");
            const std::string type = cell["type"].get<std::string>();
            const std::string value = cell["value"].get<std::string>();
            if (type == "uri") {
                row.emplace_back(Iri(value));
            } else if (type == "literal" || type == "typed-literal") {
                if (cell.contains("xml:lang"))
                    row.emplace_back(Literal::with_lang(value, cell["xml:lang"].get<std::string>()));
                else if (cell.contains("datatype"))
                    row.emplace_back(Literal::typed(value, Iri(cell["datatype"].get<std::string>())));
                else
                    row.emplace_back(Literal::plain(value));
            } else {
                throw MalformedResponse("unsupported binding type " + type);
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace kgqa::sparql
