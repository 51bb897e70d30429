#include "minirank/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

namespace minirank {

std::vector<std::string> word_split(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (c >= 0x80) {
            // non-ASCII bytes are kept verbatim inside the current word
            cur.push_back(static_cast<char>(c));
        } else {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

namespace {

const char* kSpecialNames[Vocab::kNumSpecials] = {"<pad>", "<unk>", "<bos>", "<sep>"};

Vocab vocab_from_tokens(const std::vector<std::string>& kept) {
    Vocab v;
    for (const char* s : kSpecialNames) v.id_to_token.emplace_back(s);
    for (const auto& t : kept) v.id_to_token.push_back(t);
    for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[i]] = i;
    return v;
}

} // namespace

Vocab build_vocab(const std::vector<std::string>& texts, int max_size) {
    if (max_size < 5) throw std::invalid_argument("max_size must be >= 5");
    if (texts.empty()) throw std::invalid_argument("empty corpus");
    std::map<std::string, long> freq;  // ordered: lexicographic tie-break for free
    for (const auto& t : texts)
        for (const auto& w : word_split(t)) ++freq[w];
    if (freq.empty()) throw std::invalid_argument("corpus contains no tokens");

    std::vector<std::pair<std::string, long>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    size_t keep = std::min<size_t>(items.size(), static_cast<size_t>(max_size - Vocab::kNumSpecials));
    std::vector<std::string> kept;
    for (size_t i = 0; i < keep; ++i) kept.push_back(items[i].first);
    return vocab_from_tokens(kept);
}

Vocab build_vocab(const Dataset& ds, int max_size) {
    std::vector<std::string> texts;
    texts.reserve(ds.passages.size() + ds.queries.size());
    for (const auto& p : ds.passages) texts.push_back(p.title.empty() ? p.text : p.title + " " + p.text);
    for (const auto& q : ds.queries) texts.push_back(q.text);
    return build_vocab(texts, max_size);
}

TokenSeq encode(const Vocab& vocab, const std::string& text, int max_len) {
    if (max_len < 2) throw std::invalid_argument("max_len must be >= 2");
    TokenSeq seq;
    seq.ids.push_back(Vocab::kBos);
    for (const auto& w : word_split(text)) {
        if (static_cast<int>(seq.ids.size()) >= max_len) break;
        seq.ids.push_back(vocab.id_of(w));
    }
    int real = static_cast<int>(seq.ids.size());
    seq.ids.resize(static_cast<size_t>(max_len), Vocab::kPad);
    seq.attention_keep.resize(static_cast<size_t>(max_len));
    for (int i = 0; i < max_len; ++i) seq.attention_keep[static_cast<size_t>(i)] = i < real;
    return seq;
}

TokenSeq encode_pair(const Vocab& vocab, const std::string& query,
                     const std::string& passage, int max_len) {
    if (max_len < 4) throw std::invalid_argument("max_len must be >= 4");
    std::vector<int> q_ids, p_ids;
    for (const auto& w : word_split(query)) q_ids.push_back(vocab.id_of(w));
    for (const auto& w : word_split(passage)) p_ids.push_back(vocab.id_of(w));

    const int avail = max_len - 1;  // BOS always kept
    TokenSeq seq;
    seq.ids.push_back(Vocab::kBos);
    int room_for_passage = avail - static_cast<int>(q_ids.size()) - 1;
    if (room_for_passage > 0) {
        seq.ids.insert(seq.ids.end(), q_ids.begin(), q_ids.end());
        seq.ids.push_back(Vocab::kSep);
        int n_p = std::min<int>(room_for_passage, static_cast<int>(p_ids.size()));
        seq.ids.insert(seq.ids.end(), p_ids.begin(), p_ids.begin() + n_p);
    } else {
        // no room for any passage token: drop SEP and truncate the query
        int n_q = std::min<int>(avail, static_cast<int>(q_ids.size()));
        seq.ids.insert(seq.ids.end(), q_ids.begin(), q_ids.begin() + n_q);
    }
    int real = static_cast<int>(seq.ids.size());
    seq.ids.resize(static_cast<size_t>(max_len), Vocab::kPad);
    seq.attention_keep.resize(static_cast<size_t>(max_len));
    for (int i = 0; i < max_len; ++i) seq.attention_keep[static_cast<size_t>(i)] = i < real;
    return seq;
}

void save_vocab(const Vocab& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& t : vocab.id_to_token) out << t << "\n";
}

Vocab load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.size() < Vocab::kNumSpecials)
        throw std::runtime_error("vocab file too short: " + path);
    for (int i = 0; i < Vocab::kNumSpecials; ++i)
        if (lines[static_cast<size_t>(i)] != kSpecialNames[i])
            throw std::runtime_error("vocab file missing special-token header: " + path);
    std::vector<std::string> kept(lines.begin() + Vocab::kNumSpecials, lines.end());
    return vocab_from_tokens(kept);
}

} // namespace minirank
