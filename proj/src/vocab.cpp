#include "a4nt/vocab.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <stdexcept>

namespace a4nt {

namespace {

constexpr std::array<std::string_view, token::kReservedCount> kReserved = {
    "<pad>", "<start>", "<end>", "<unk>", "NUM", "PERSON", "MISC", "ORG", "LOC"};

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_number(std::string_view s) {
    if (s.empty() || !is_digit(s.front()) || !is_digit(s.back())) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const unsigned char c = s[i];
        if (is_digit(c)) continue;
        if ((c == '.' || c == ',') && i + 1 < s.size() && is_digit(s[i + 1]) && is_digit(s[i - 1])) continue;
        return false;
    }
    return true;
}

bool is_placeholder(std::string_view s) {
    for (int id = token::kNum; id < token::kReservedCount; ++id)
        if (kReserved[std::size_t(id)] == s) return true;
    return false;
}

bool is_reserved(std::string_view s) {
    return std::find(kReserved.begin(), kReserved.end(), s) != kReserved.end();
}

std::string normalize(std::string raw) {
    if (is_placeholder(raw)) return raw;
    if (is_number(raw)) return std::string(kReserved[token::kNum]);
    for (char& c : raw)
        if (static_cast<unsigned char>(c) < 0x80) c = char(std::tolower(static_cast<unsigned char>(c)));
    return raw;
}

}  // namespace

std::span<const std::string_view> reserved_tokens() { return kReserved; }

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const unsigned char c = text[i];
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (!is_word_byte(c)) {
            out.emplace_back(1, char(c));
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n) {
            const unsigned char d = text[j];
            if (is_word_byte(d)) {
                ++j;
                continue;
            }
            // Keep "don't" and "3.5" / "1,000" whole.
            const bool inner = j + 1 < n && j > i;
            if (inner && d == '\'' && std::isalpha(static_cast<unsigned char>(text[j - 1])) &&
                std::isalpha(static_cast<unsigned char>(text[j + 1]))) {
                ++j;
                continue;
            }
            if (inner && (d == '.' || d == ',') && is_digit(text[j - 1]) && is_digit(text[j + 1])) {
                ++j;
                continue;
            }
            break;
        }
        out.push_back(normalize(std::string(text.substr(i, j - i))));
        i = j;
    }
    return out;
}

Vocabulary::Vocabulary() {
    for (std::string_view r : kReserved) add(std::string(r));
}

void Vocabulary::add(std::string token) {
    const int id = int(id_to_token_.size());
    if (!token_to_id_.emplace(token, id).second)
        throw std::invalid_argument("vocabulary: duplicate token '" + token + "'");
    id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> tokenized_sentences, int min_frequency) {
    if (tokenized_sentences.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");
    std::map<std::string, long> counts;
    for (const auto& sentence : tokenized_sentences)
        for (const auto& tok : sentence) ++counts[tok];
    if (counts.empty()) throw std::invalid_argument("build_vocabulary: corpus has no tokens");
    std::vector<std::pair<std::string, long>> kept;
    for (auto& [tok, count] : counts)
        if (count >= min_frequency && !is_reserved(tok)) kept.emplace_back(tok, count);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (auto& [tok, count] : kept) v.add(tok);
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
    if (id_to_token.size() < kReserved.size())
        throw std::invalid_argument("vocabulary: token list shorter than the reserved block");
    for (std::size_t i = 0; i < kReserved.size(); ++i)
        if (id_to_token[i] != kReserved[i])
            throw std::invalid_argument("vocabulary: reserved token " + std::to_string(i) + " must be '" +
                                        std::string(kReserved[i]) + "', found '" + id_to_token[i] + "'");
    Vocabulary v;
    for (std::size_t i = kReserved.size(); i < id_to_token.size(); ++i) v.add(std::move(id_to_token[i]));
    return v;
}

int Vocabulary::id(std::string_view token) const {
    const auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? token::kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return token_to_id_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || std::size_t(id) >= id_to_token_.size())
        throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
    return id_to_token_[std::size_t(id)];
}

Sentence Sentence::from_words(std::span<const int> words) {
    Sentence s;
    s.tokens.assign(words.begin(), words.end());
    s.tokens.push_back(token::kEnd);
    return s;
}

Sentence encode_sentence(std::string_view text, const Vocabulary& vocab) {
    const auto toks = tokenize(text);
    if (toks.empty()) throw std::invalid_argument("encode_sentence: empty text");
    Sentence s;
    s.tokens.reserve(toks.size() + 1);
    for (const auto& t : toks) s.tokens.push_back(vocab.id(t));
    s.tokens.push_back(token::kEnd);
    return s;
}

std::string decode_sentence(std::span<const int> ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        if (id == token::kEnd) break;
        if (!out.empty()) out += ' ';
        out += vocab.token(id);
    }
    return out;
}

}  // namespace a4nt
