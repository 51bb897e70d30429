#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "minirank/corpus.hpp"

namespace minirank {

struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kSep = 3;
    static constexpr int kNumSpecials = 4;

    std::unordered_map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token;  // specials included, index = id

    int size() const { return static_cast<int>(id_to_token.size()); }
    int id_of(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? kUnk : it->second;
    }
};

struct TokenSeq {
    std::vector<int> ids;
    std::vector<bool> attention_keep;  // true = real token, false = padding

    bool operator==(const TokenSeq&) const = default;
};

/// Lowercases and splits text on whitespace and punctuation boundaries.
std::vector<std::string> word_split(const std::string& text);

/// Builds a frequency vocabulary over the given texts. Keeps the most
/// frequent (max_size - 4) tokens; frequency ties break lexicographically.
Vocab build_vocab(const std::vector<std::string>& texts, int max_size);
Vocab build_vocab(const Dataset& ds, int max_size);

/// [BOS] + token ids (UNK for OOV), truncated then padded to max_len.
TokenSeq encode(const Vocab& vocab, const std::string& text, int max_len);

/// [BOS] + query + [SEP] + passage, truncated to max_len dropping passage
/// tokens first, then query tokens; padded to max_len.
TokenSeq encode_pair(const Vocab& vocab, const std::string& query,
                     const std::string& passage, int max_len);

void save_vocab(const Vocab& vocab, const std::string& path);
Vocab load_vocab(const std::string& path);

} // namespace minirank
