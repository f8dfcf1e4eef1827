#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"
#include "semproto/spm.hpp"

namespace semproto {

namespace {

struct ParsedIdent {
    VocabKind kind;
    int ue;          // 0-based
    int index;       // level or CM index
    UeAction action; // Action kind only
    std::string text;
};

ParsedIdent parse_ident(const std::string& s, int line, int col) {
    if (s.size() < 4) throw ParseError("identifier too short: " + s, line, col);
    ParsedIdent id;
    id.text = s;
    switch (s[0]) {
        case 'b': id.kind = VocabKind::Input; break;
        case 'u': id.kind = VocabKind::Ucm; break;
        case 'd': id.kind = VocabKind::Dcm; break;
        case 'a': id.kind = VocabKind::Action; break;
        default: throw ParseError("identifier must start with b/u/d/a: " + s, line, col);
    }
    if (s[1] != '1' && s[1] != '2')
        throw ParseError("identifier UE index must be 1 or 2: " + s, line, col);
    id.ue = s[1] - '1';
    if (s[2] != '_') throw ParseError("identifier missing `_`: " + s, line, col);
    const std::string suffix = s.substr(3);
    if (id.kind == VocabKind::Action) {
        if (suffix.size() != 1 || (suffix[0] != 'S' && suffix[0] != 'A' && suffix[0] != 'D'))
            throw ParseError("action identifier must end in S, A or D: " + s, line, col);
        id.action = action_from_symbol(suffix[0]);
        id.index = static_cast<int>(id.action);
    } else {
        for (char c : suffix)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw ParseError("identifier index must be numeric: " + s, line, col);
        id.index = std::atoi(suffix.c_str());
    }
    return id;
}

ClauseKind clause_kind_for(VocabKind head, VocabKind tail, int line, int col) {
    if (head == VocabKind::Ucm && tail == VocabKind::Input) return ClauseKind::Uplink;
    if (head == VocabKind::Dcm && tail == VocabKind::Ucm) return ClauseKind::Downlink;
    if (head == VocabKind::Action && tail == VocabKind::Dcm) return ClauseKind::Action;
    if (head == VocabKind::Action && tail == VocabKind::Input) return ClauseKind::GrantFree;
    throw ParseError("invalid stage pair " + vocab_kind_name(head) + " :- " +
                     vocab_kind_name(tail), line, col);
}

std::string meta_or_dash(const std::string& s) { return s.empty() ? "-" : s; }

std::string dash_to_empty(const std::string& s) { return s == "-" ? "" : s; }

}  // namespace

std::string serialize_problog(const Spm& spm) {
    std::ostringstream out;
    out << "% semantic protocol model\n";
    out << "% meta source=" << meta_or_dash(spm.source_hash)
        << " options=" << meta_or_dash(spm.options_desc)
        << " samples=" << format_double(spm.sample_weight)
        << " cm_width=" << spm.cm_width << "\n";
    std::vector<Clause> ordered = spm.clauses;
    sort_clauses_canonically(spm, ordered);
    for (const Clause& c : ordered) {
        out << format_double_decimal(c.prob) << "::" << spm.vocab(c.head).label << " :- "
            << spm.vocab(c.tail).label << ".\n";
    }
    return out.str();
}

Spm parse_problog(const std::string& text) {
    struct RawClause {
        double prob;
        ParsedIdent head, tail;
        ClauseKind kind;
    };
    std::vector<RawClause> raw;
    std::map<std::string, std::string> meta;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t pos = line.find_first_not_of(" \t");
        if (pos == std::string::npos) continue;
        if (line[pos] == '%') {
            std::istringstream comment(line.substr(pos + 1));
            std::string word;
            comment >> word;
            if (word == "meta") {
                while (comment >> word) {
                    const auto eq = word.find('=');
                    if (eq != std::string::npos)
                        meta[word.substr(0, eq)] = word.substr(eq + 1);
                }
            }
            continue;
        }

        // <prob>::<head> :- <tail>.
        const std::size_t sep = line.find("::", pos);
        if (sep == std::string::npos)
            throw ParseError("expected `::` after probability", line_no,
                             static_cast<int>(pos) + 1);
        const std::string prob_text = line.substr(pos, sep - pos);
        char* end = nullptr;
        const double prob = std::strtod(prob_text.c_str(), &end);
        if (end == prob_text.c_str() || *end != '\0')
            throw ParseError("malformed probability: " + prob_text, line_no,
                             static_cast<int>(pos) + 1);
        if (prob < 0.0 || prob > 1.0)
            throw ParseError("probability out of range [0,1]: " + prob_text, line_no,
                             static_cast<int>(pos) + 1);
        if (prob == 0.0)
            throw ParseError("zero-probability clause cannot be entailed", line_no,
                             static_cast<int>(pos) + 1);

        std::size_t head_begin = sep + 2;
        const std::size_t impl = line.find(" :- ", head_begin);
        if (impl == std::string::npos)
            throw ParseError("expected ` :- ` between head and tail", line_no,
                             static_cast<int>(head_begin) + 1);
        std::size_t tail_begin = impl + 4;
        const std::size_t dot = line.find('.', tail_begin);
        if (dot == std::string::npos)
            throw ParseError("clause must end with `.`", line_no,
                             static_cast<int>(line.size()));
        const std::string after = line.substr(dot + 1);
        if (after.find_first_not_of(" \t") != std::string::npos)
            throw ParseError("trailing text after clause", line_no,
                             static_cast<int>(dot) + 2);

        const std::string head_text = line.substr(head_begin, impl - head_begin);
        const std::string tail_text = line.substr(tail_begin, dot - tail_begin);
        RawClause rc;
        rc.prob = prob;
        rc.head = parse_ident(head_text, line_no, static_cast<int>(head_begin) + 1);
        rc.tail = parse_ident(tail_text, line_no, static_cast<int>(tail_begin) + 1);
        rc.kind = clause_kind_for(rc.head.kind, rc.tail.kind, line_no,
                                  static_cast<int>(pos) + 1);
        raw.push_back(std::move(rc));
    }

    Spm spm;
    if (meta.count("cm_width")) spm.cm_width = std::atoi(meta["cm_width"].c_str());
    if (meta.count("source")) spm.source_hash = dash_to_empty(meta["source"]);
    if (meta.count("options")) spm.options_desc = dash_to_empty(meta["options"]);
    if (meta.count("samples")) spm.sample_weight = std::strtod(meta["samples"].c_str(), nullptr);

    // Vocabulary table in canonical order (stage, UE, index).
    std::map<std::tuple<int, int, int>, ParsedIdent> vocab_sorted;
    for (const RawClause& rc : raw) {
        for (const ParsedIdent* id : {&rc.head, &rc.tail})
            vocab_sorted.emplace(std::make_tuple(static_cast<int>(id->kind), id->ue, id->index),
                                 *id);
    }
    std::map<std::string, VocabId> by_label;
    for (const auto& [key, ident] : vocab_sorted) {
        Vocabulary v;
        v.id = static_cast<VocabId>(spm.vocabularies.size());
        v.kind = ident.kind;
        v.ue = ident.ue;
        v.label = ident.text;
        if (ident.kind == VocabKind::Input) v.level = ident.index;
        if (ident.kind == VocabKind::Action) v.action = ident.action;
        by_label[v.label] = v.id;
        spm.vocabularies.push_back(std::move(v));
    }

    std::set<std::pair<VocabId, VocabId>> seen_pairs;
    for (const RawClause& rc : raw) {
        Clause c;
        c.kind = rc.kind;
        c.prob = rc.prob;
        c.head = by_label[rc.head.text];
        c.tail = by_label[rc.tail.text];
        c.ue = rc.head.ue;
        c.tail_ue = rc.tail.ue;
        if (c.kind == ClauseKind::Uplink && rc.head.ue != rc.tail.ue)
            throw ParseError("uplink clause must stay within one UE: " + rc.head.text +
                             " :- " + rc.tail.text, 0, 0);
        if ((c.kind == ClauseKind::Action || c.kind == ClauseKind::GrantFree) &&
            rc.head.ue != rc.tail.ue)
            throw ParseError("action clause must stay within one UE: " + rc.head.text +
                             " :- " + rc.tail.text, 0, 0);
        if (!seen_pairs.insert({c.tail, c.head}).second)
            throw ParseError("duplicate clause for tail/head pair " + rc.tail.text +
                             " -> " + rc.head.text, 0, 0);
        spm.clauses.push_back(c);
    }
    sort_clauses_canonically(spm, spm.clauses);
    return spm;
}

Spm load_problog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open SPM file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_problog(buf.str());
}

void save_problog_file(const Spm& spm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << serialize_problog(spm);
    if (!out) throw IoError("failed writing SPM file: " + path);
}

}  // namespace semproto
