#include "oracle/codeswitch.hpp"

#include <fstream>

#include "oracle/rng.hpp"

namespace oracle {

namespace {

// Unicode whitespace code points (White_Space=yes).
bool is_space_cp(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

// Decodes one UTF-8 code point at i; malformed bytes decode as themselves
// (latin-1 style) so tokenization never fails on dirty input.
char32_t decode_utf8(const std::string& s, std::size_t i, std::size_t& len) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    len = 1;
    if (b0 < 0x80) return b0;
    int extra = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { extra = 1; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { extra = 2; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { extra = 3; cp = b0 & 0x07; }
    else return b0;
    if (i + static_cast<std::size_t>(extra) >= s.size()) return b0;
    for (int k = 1; k <= extra; ++k) {
        const auto bk = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((bk & 0xC0) != 0x80) return b0;
        cp = (cp << 6) | (bk & 0x3F);
    }
    len = static_cast<std::size_t>(extra) + 1;
    return cp;
}

}  // namespace

std::vector<std::string> whitespace_tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::string cur;
    std::size_t i = 0;
    while (i < line.size()) {
        std::size_t len = 1;
        const char32_t cp = decode_utf8(line, i, len);
        if (is_space_cp(cp)) {
            if (!cur.empty()) {
                tokens.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.append(line, i, len);
        }
        i += len;
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

BilingualDictionary parse_dictionary(std::istream& in) {
    BilingualDictionary dict;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> toks = whitespace_tokenize(line);
        if (toks.size() < 2) {
            ++dict.skipped_lines;
            continue;
        }
        std::string translation = toks[1];
        for (std::size_t k = 2; k < toks.size(); ++k) {
            translation += ' ';
            translation += toks[k];
        }
        dict.entries[toks[0]].push_back(std::move(translation));
    }
    return dict;
}

BilingualDictionary load_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dictionary \"" + path + "\"");
    return parse_dictionary(in);
}

CodeSwitchResult build_codeswitch(const std::vector<std::vector<std::string>>& sentences,
                                  const BilingualDictionary& dict, double rate,
                                  std::uint64_t seed) {
    if (!(rate > 0.0) || rate > 1.0)
        throw DataError("codeswitch rate must be in (0, 1], got " + std::to_string(rate));
    if (dict.empty()) throw DataError("codeswitch: empty dictionary");

    Rng rng(seed);
    CodeSwitchResult out;
    for (const auto& sentence : sentences) {
        std::vector<std::size_t> covered;
        for (std::size_t p = 0; p < sentence.size(); ++p)
            if (dict.entries.count(sentence[p])) covered.push_back(p);
        if (covered.empty()) {
            ++out.excluded;
            continue;
        }
        CodeSwitchRecord rec;
        rec.original = sentence;
        rec.switched = sentence;
        for (std::size_t p : covered) {
            if (rng.uniform() < rate) {
                const auto& alts = dict.entries.at(sentence[p]);
                rec.switched[p] = alts[rng.index(alts.size())];
                rec.replaced_positions.push_back(p);
            }
        }
        if (rec.replaced_positions.empty()) {
            // Guarantee at least one switched word per emitted sentence.
            const std::size_t p = covered.front();
            const auto& alts = dict.entries.at(sentence[p]);
            rec.switched[p] = alts[rng.index(alts.size())];
            rec.replaced_positions.push_back(p);
        }
        out.total_replacements += rec.replaced_positions.size();
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace oracle
