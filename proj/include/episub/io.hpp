#pragma once

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "algebra.hpp"
#include "canonical.hpp"
#include "certificates.hpp"
#include "core.hpp"
#include "epi.hpp"

namespace episub::io {

struct parse_error : error {
    parse_error(const std::string& file, int line, int col, const std::string& msg)
        : error(file + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

namespace detail {

struct Token {
    std::string text;
    int line = 0;
    int col = 0;
};

/// Whitespace-separated tokens; '#' comments run to end of line; the
/// punctuation characters ( ) , = / stand alone.
class Tokenizer {
public:
    Tokenizer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {
        scan();
    }

    bool eof() const { return !lookahead_.has_value(); }

    Token peek() const {
        if (!lookahead_) fail("unexpected end of input");
        return *lookahead_;
    }

    Token next() {
        Token t = peek();
        scan();
        return t;
    }

    /// The pending token extended with every abutting non-space character,
    /// punctuation included. Used for element labels such as "(0,1)".
    Token next_raw() {
        Token t = peek();
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '#') break;
            t.text += c;
            advance();
        }
        scan();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        if (lookahead_)
            throw parse_error(file_, lookahead_->line, lookahead_->col,
                              msg + " (near '" + lookahead_->text + "')");
        throw parse_error(file_, line_, col_, msg);
    }

    const std::string& file() const { return file_; }

private:
    static bool punct(char c) { return c == '(' || c == ')' || c == ',' || c == '=' || c == '/'; }

    void advance() {
        if (pos_ < text_.size() && text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void scan() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
        if (pos_ >= text_.size()) {
            lookahead_.reset();
            return;
        }
        Token t;
        t.line = line_;
        t.col = col_;
        if (punct(text_[pos_])) {
            t.text = std::string(1, text_[pos_]);
            advance();
        } else {
            while (pos_ < text_.size()) {
                char c = text_[pos_];
                if (std::isspace(static_cast<unsigned char>(c)) || punct(c) || c == '#') break;
                t.text += c;
                advance();
            }
        }
        lookahead_ = std::move(t);
    }

    std::string_view text_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::optional<Token> lookahead_;
};

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

inline bool is_variable_name(std::string_view s) {
    if (s.size() < 2 || (s[0] != 'x' && s[0] != 'y')) return false;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

inline bool is_reserved(std::string_view s) {
    return s == "algebra" || s == "size" || s == "labels" || s == "op" || s == "certificate" ||
           s == "signature" || s == "end" || is_variable_name(s);
}

inline int parse_int(Tokenizer& tok, const char* what) {
    Token t = tok.next();
    if (t.text.empty() ||
        !std::all_of(t.text.begin(), t.text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw parse_error(tok.file(), t.line, t.col,
                          std::string("expected ") + what + ", got '" + t.text + "'");
    long v = std::stol(t.text);
    if (v > 1'000'000)
        throw parse_error(tok.file(), t.line, t.col, std::string(what) + " out of range");
    return static_cast<int>(v);
}

inline void expect(Tokenizer& tok, std::string_view word) {
    Token t = tok.next();
    if (t.text != word)
        throw parse_error(tok.file(), t.line, t.col,
                          "expected '" + std::string(word) + "', got '" + t.text + "'");
}

} // namespace detail

/// An algebra as read from or written to a document: the table data plus
/// presentation extras (a name, optional element labels).
struct AlgebraDocument {
    std::string name;
    Algebra algebra;
    std::vector<std::string> labels; // empty, or one per element
};

/// Document grammar (whitespace-insensitive, '#' comments):
///
///   algebra NAME
///   size N
///   labels TOK...          (optional, N tokens)
///   op NAME ARITY
///   V...                    (N^ARITY values, row-major, first arg most significant)
///
/// Operation names are identifiers; a few keywords and the variable shapes
/// x<k>/y<k> are reserved so certificates stay parseable.
inline AlgebraDocument parse_algebra_document(std::string_view text, const std::string& file) {
    detail::Tokenizer tok(text, file);
    AlgebraDocument doc;
    detail::expect(tok, "algebra");
    detail::Token name = tok.next();
    if (!detail::is_identifier(name.text) || detail::is_reserved(name.text))
        throw parse_error(file, name.line, name.col, "bad algebra name '" + name.text + "'");
    doc.name = name.text;
    detail::expect(tok, "size");
    int n = detail::parse_int(tok, "universe size");
    if (n <= 0) throw parse_error(file, name.line, name.col, "universe must be nonempty");
    doc.algebra.size = n;

    if (!tok.eof() && tok.peek().text == "labels") {
        tok.next();
        for (int i = 0; i < n; ++i) {
            detail::Token t = tok.next_raw();
            if (t.text == "op")
                throw parse_error(file, t.line, t.col, "labels: expected one label per element");
            for (const std::string& seen : doc.labels)
                if (seen == t.text)
                    throw parse_error(file, t.line, t.col, "duplicate label '" + t.text + "'");
            doc.labels.push_back(t.text);
        }
    }
    while (!tok.eof()) {
        detail::expect(tok, "op");
        detail::Token opname = tok.next();
        if (!detail::is_identifier(opname.text) || detail::is_reserved(opname.text))
            throw parse_error(file, opname.line, opname.col,
                              "bad operation name '" + opname.text + "'");
        if (doc.algebra.sig.index_of(opname.text) >= 0)
            throw parse_error(file, opname.line, opname.col,
                              "duplicate operation '" + opname.text + "'");
        int arity = detail::parse_int(tok, "arity");
        if (arity > 6)
            throw parse_error(file, opname.line, opname.col, "arity larger than 6 not supported");
        doc.algebra.sig.symbols.push_back(OperationSymbol{opname.text, arity});
        std::vector<int> table;
        std::size_t need = table_size(n, arity);
        table.reserve(need);
        for (std::size_t i = 0; i < need; ++i) {
            detail::Token t = tok.peek();
            int v = detail::parse_int(tok, "table entry");
            if (v >= n)
                throw parse_error(file, t.line, t.col, "table entry out of range");
            table.push_back(v);
        }
        doc.algebra.tables.push_back(std::move(table));
    }
    if (doc.algebra.sig.symbols.empty())
        throw parse_error(file, 1, 1, "algebra needs at least one operation");
    doc.algebra.validate();
    return doc;
}

inline std::string emit_algebra_document(const AlgebraDocument& doc) {
    std::string out = "algebra " + doc.name + "\n";
    out += "size " + std::to_string(doc.algebra.size) + "\n";
    if (!doc.labels.empty()) {
        out += "labels";
        for (const std::string& l : doc.labels) out += " " + l;
        out += "\n";
    }
    int n = doc.algebra.size;
    for (std::size_t f = 0; f < doc.algebra.sig.symbols.size(); ++f) {
        const auto& sym = doc.algebra.sig.symbols[f];
        out += "op " + sym.name + " " + std::to_string(sym.arity) + "\n";
        const auto& t = doc.algebra.tables[f];
        std::size_t per_line = sym.arity == 0 ? 1 : static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < t.size(); ++i) {
            out += std::to_string(t[i]);
            out += ((i + 1) % per_line == 0) ? '\n' : ' ';
        }
    }
    return out;
}

/// Certificate text: the element correspondence, then one equation per
/// line. Example:
///
///   certificate
///   size 4
///   signature meet/2 join/2
///   x0 = 0
///   y0 = 2
///   meet(x0, y0) = x0
///   end
inline std::string emit_certificate(const DeltaCertificate& cert) {
    std::string out = "certificate\n";
    out += "size " + std::to_string(cert.b_size) + "\n";
    out += "signature";
    for (const auto& s : cert.signature.symbols)
        out += " " + s.name + "/" + std::to_string(s.arity);
    out += "\n";
    auto var_name = [&](int v) {
        int nx = cert.inputs();
        return v < nx ? "x" + std::to_string(v) : "y" + std::to_string(v - nx);
    };
    for (int v = 0; v < cert.var_count(); ++v)
        out += var_name(v) + " = " + std::to_string(cert.element_of_var(v)) + "\n";
    for (const FlatEquation& eq : cert.equations) {
        out += cert.signature.symbols[static_cast<std::size_t>(eq.sym)].name + "(";
        for (std::size_t i = 0; i < eq.args.size(); ++i) {
            if (i) out += ", ";
            out += var_name(eq.args[i]);
        }
        out += ") = " + var_name(eq.result) + "\n";
    }
    out += "end\n";
    return out;
}

inline DeltaCertificate parse_certificate(std::string_view text, const std::string& file) {
    detail::Tokenizer tok(text, file);
    DeltaCertificate cert;
    detail::expect(tok, "certificate");
    detail::expect(tok, "size");
    cert.b_size = detail::parse_int(tok, "universe size");
    detail::expect(tok, "signature");
    while (!tok.eof() && detail::is_identifier(tok.peek().text) && !detail::is_reserved(tok.peek().text)) {
        detail::Token name = tok.next();
        detail::expect(tok, "/");
        int arity = detail::parse_int(tok, "arity");
        if (cert.signature.index_of(name.text) >= 0)
            throw parse_error(file, name.line, name.col, "duplicate operation '" + name.text + "'");
        cert.signature.symbols.push_back(OperationSymbol{name.text, arity});
    }
    if (cert.signature.symbols.empty()) tok.fail("certificate needs a signature");

    std::vector<std::pair<int, int>> xs, ys; // (index, element)
    struct RawEq {
        std::string sym;
        std::vector<std::string> args;
        std::string result;
        int line, col;
    };
    std::vector<RawEq> raw;
    while (true) {
        detail::Token head = tok.next();
        if (head.text == "end") break;
        if (detail::is_variable_name(head.text)) {
            detail::expect(tok, "=");
            int elem = detail::parse_int(tok, "element");
            if (elem >= cert.b_size)
                throw parse_error(file, head.line, head.col, "element out of range");
            int idx = std::stoi(head.text.substr(1));
            (head.text[0] == 'x' ? xs : ys).push_back({idx, elem});
            continue;
        }
        if (!detail::is_identifier(head.text))
            throw parse_error(file, head.line, head.col, "expected equation or 'end'");
        RawEq eq;
        eq.sym = head.text;
        eq.line = head.line;
        eq.col = head.col;
        detail::expect(tok, "(");
        if (tok.peek().text != ")") {
            while (true) {
                detail::Token arg = tok.next();
                if (!detail::is_variable_name(arg.text))
                    throw parse_error(file, arg.line, arg.col, "expected variable, got '" + arg.text + "'");
                eq.args.push_back(arg.text);
                detail::Token sep = tok.next();
                if (sep.text == ")") break;
                if (sep.text != ",")
                    throw parse_error(file, sep.line, sep.col, "expected ',' or ')'");
            }
        } else {
            tok.next();
        }
        detail::expect(tok, "=");
        detail::Token res = tok.next();
        if (!detail::is_variable_name(res.text))
            throw parse_error(file, res.line, res.col, "expected variable, got '" + res.text + "'");
        eq.result = res.text;
        raw.push_back(std::move(eq));
    }

    auto fill = [&](std::vector<std::pair<int, int>>& pairs, std::vector<int>& out, char kind) {
        std::sort(pairs.begin(), pairs.end());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].first != static_cast<int>(i))
                throw parse_error(file, 1, 1,
                                  std::string(1, kind) +
                                      " variables must be numbered 0..k-1 without repeats or gaps");
            out.push_back(pairs[i].second);
        }
    };
    fill(xs, cert.x_elements, 'x');
    fill(ys, cert.y_elements, 'y');

    auto var_index = [&](const std::string& name, int line, int col) {
        int idx = std::stoi(name.substr(1));
        if (name[0] == 'x') {
            if (idx >= static_cast<int>(cert.x_elements.size()))
                throw parse_error(file, line, col, "undeclared variable " + name);
            return idx;
        }
        if (idx >= static_cast<int>(cert.y_elements.size()))
            throw parse_error(file, line, col, "undeclared variable " + name);
        return cert.inputs() + idx;
    };
    for (const RawEq& r : raw) {
        FlatEquation eq;
        eq.sym = cert.signature.index_of(r.sym);
        if (eq.sym < 0) throw parse_error(file, r.line, r.col, "unknown operation '" + r.sym + "'");
        if (static_cast<int>(r.args.size()) !=
            cert.signature.symbols[static_cast<std::size_t>(eq.sym)].arity)
            throw parse_error(file, r.line, r.col, "arity mismatch for '" + r.sym + "'");
        for (const std::string& a : r.args) eq.args.push_back(var_index(a, r.line, r.col));
        eq.result = var_index(r.result, r.line, r.col);
        cert.equations.push_back(std::move(eq));
    }
    return cert;
}

/// Knobs shared by every CLI command.
struct RunConfig {
    ResourceLimits limits;
    int threads = 1;
    std::string cache_dir;
    std::uint64_t seed = 0;
};

inline nlohmann::json algebra_to_json(const AlgebraDocument& doc) {
    nlohmann::json j;
    j["name"] = doc.name;
    j["size"] = doc.algebra.size;
    j["document"] = emit_algebra_document(doc);
    return j;
}

/// Machine-readable decision report. Deliberately free of timing, thread
/// counts and anything else that varies between equivalent runs: two runs on
/// the same inputs must produce identical bytes.
inline nlohmann::json decision_report_to_json(const DecisionReport& rep,
                                              std::span<const AlgebraDocument> inputs) {
    nlohmann::json j;
    j["mode"] = to_string(rep.mode);
    j["verdict"] = to_string(rep.verdict);
    nlohmann::json in = nlohmann::json::array();
    for (const auto& doc : inputs) in.push_back(doc.name);
    j["inputs"] = in;
    if (!inputs.empty()) {
        nlohmann::json sig = nlohmann::json::array();
        for (const auto& s : inputs[0].algebra.sig.symbols)
            sig.push_back(s.name + "/" + std::to_string(s.arity));
        j["signature"] = sig;
    }
    if (rep.mode == DecideMode::arithmetical) {
        j["pixley_term"] = rep.pixley_term
                               ? nlohmann::json(term_to_string(*rep.pixley_term,
                                                               inputs[0].algebra.sig))
                               : nlohmann::json();
    } else {
        j["nu_arity"] = rep.nu_arity;
        j["nu_term"] = rep.nu_term
                           ? nlohmann::json(term_to_string(*rep.nu_term, inputs[0].algebra.sig))
                           : nlohmann::json();
    }
    j["fold"] = rep.fold;
    j["conditional_on_fsi_surrogate"] = rep.conditional_on_fsi_surrogate;
    nlohmann::json cls;
    cls["description"] = rep.s_description;
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : rep.s_class.members()) {
        nlohmann::json mj;
        mj["size"] = m.alg.size;
        mj["canonical"] = m.canon.digest();
        mj["provenance"] = m.provenance;
        members.push_back(mj);
    }
    cls["members"] = members;
    j["s_class"] = cls;
    if (rep.witness) {
        nlohmann::json w;
        w["product_factors"] = rep.witness->product_factors;
        w["b_elements"] = rep.witness->b_elements;
        AlgebraDocument bdoc;
        bdoc.name = "witness_b";
        bdoc.algebra = rep.witness->b;
        w["b"] = emit_algebra_document(bdoc);
        w["a_members"] = rep.witness->a_members;
        w["certificate"] = emit_certificate(rep.witness->certificate);
        j["witness"] = w;
    } else {
        j["witness"] = nullptr;
    }
    j["inapplicable_reason"] = rep.inapplicable_reason;
    j["limits_hit"] = rep.verdict == Verdict::resource_limit;
    j["limit_reason"] = rep.limit_reason;
    nlohmann::json stats;
    stats["products_built"] = rep.stat_products;
    stats["subalgebras_scanned"] = rep.stat_subalgebras;
    stats["pairs_checked"] = rep.stat_pairs;
    stats["hom_calls"] = rep.stat_hom_calls;
    j["statistics"] = stats;
    return j;
}

/// Comma- or space-separated element list, e.g. "0,1,3".
inline std::vector<int> parse_element_list(const std::string& text) {
    std::vector<int> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        for (char c : cur)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw error("bad element list entry '" + cur + "'");
        out.push_back(std::stoi(cur));
        cur.clear();
    };
    for (char c : text) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c)))
            flush();
        else
            cur += c;
    }
    flush();
    if (out.empty()) throw error("empty element list");
    return out;
}

/// Stable key for caching decide runs: input presentation plus every option
/// that can change the report.
inline std::string decide_cache_key(std::span<const AlgebraDocument> inputs,
                                    const DecideOptions& opt) {
    std::string blob;
    for (const auto& doc : inputs) blob += emit_algebra_document(doc) + "\x1f";
    blob += std::string(to_string(opt.mode)) + "|" + std::to_string(opt.nu_arity) + "|" +
            (opt.fold ? std::to_string(*opt.fold) : std::string("-")) + "|" +
            (opt.s_choice == SChoice::qrsi ? "qrsi" : "is");
    std::uint64_t h = episub::detail::fnv1a64(blob.data(), blob.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace episub::io
