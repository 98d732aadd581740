#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "oracle/types.hpp"

namespace oracle {

// MUSE-layout dictionary: one line per translation, first token the source
// word, the remaining tokens one (possibly multi-word) translation. Repeated
// source words accumulate alternatives. Lines with fewer than two tokens are
// skipped and counted.
struct BilingualDictionary {
    std::map<std::string, std::vector<std::string>> entries;
    std::size_t skipped_lines = 0;

    bool empty() const { return entries.empty(); }
};

BilingualDictionary parse_dictionary(std::istream& in);
BilingualDictionary load_dictionary(const std::string& path);

// Split on Unicode whitespace only; punctuation stays attached to tokens.
std::vector<std::string> whitespace_tokenize(const std::string& line);

struct CodeSwitchRecord {
    std::vector<std::string> original;
    std::vector<std::string> switched;          // same token count as original
    std::vector<std::size_t> replaced_positions;  // never empty
};

struct CodeSwitchResult {
    std::vector<CodeSwitchRecord> records;
    std::size_t excluded = 0;  // sentences without any dictionary-covered token
    std::size_t total_replacements = 0;
};

// Each covered token is independently replaced with probability rate by a
// seeded-uniform choice among its translations. A sentence that ends up with
// zero replacements gets one forced replacement at its first covered token,
// so every emitted record carries at least one switch.
CodeSwitchResult build_codeswitch(const std::vector<std::vector<std::string>>& sentences,
                                  const BilingualDictionary& dict, double rate,
                                  std::uint64_t seed);

}  // namespace oracle
