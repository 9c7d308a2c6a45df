#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace a4nt {

/// Reserved token ids. These never move: checkpoints and corpora written by
/// any build agree on them.
namespace token {
inline constexpr int kPad = 0;
inline constexpr int kStart = 1;
inline constexpr int kEnd = 2;
inline constexpr int kUnk = 3;
inline constexpr int kNum = 4;
inline constexpr int kPerson = 5;
inline constexpr int kMisc = 6;
inline constexpr int kOrg = 7;
inline constexpr int kLoc = 8;
inline constexpr int kReservedCount = 9;
}  // namespace token

/// Surface strings of the reserved ids, index-aligned with token::k*.
std::span<const std::string_view> reserved_tokens();

/// Word-level tokenizer: splits on whitespace and punctuation, lowercases
/// ASCII letters, maps decimal numbers to NUM, and keeps the uppercase entity
/// placeholders (PERSON, MISC, ORG, LOC, NUM) as-is.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    /// Vocabulary holding only the reserved tokens.
    Vocabulary();

    /// Tokens with frequency >= min_frequency get ids in order of descending
    /// frequency, ties broken lexicographically. Throws on an empty corpus.
    static Vocabulary build(std::span<const std::vector<std::string>> tokenized_sentences, int min_frequency);

    /// Rebuilds from an id-to-token list (checkpoint headers). The list must
    /// begin with the reserved tokens and contain no duplicates.
    static Vocabulary from_tokens(std::vector<std::string> id_to_token);

    std::size_t size() const { return id_to_token_.size(); }
    /// Id of token, or UNK when absent.
    int id(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(int id) const;
    const std::vector<std::string>& tokens() const { return id_to_token_; }

private:
    void add(std::string token);

    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

/// Token ids w_0..w_{n-1} followed by END.
struct Sentence {
    std::vector<int> tokens;

    /// n: number of words, excluding END.
    std::size_t length() const { return tokens.empty() ? 0 : tokens.size() - 1; }
    std::span<const int> words() const { return std::span<const int>(tokens).first(length()); }

    static Sentence from_words(std::span<const int> words);
    bool operator==(const Sentence&) const = default;
};

/// Tokenizes, maps to ids (UNK fallback) and appends END. Throws on text with
/// no tokens.
Sentence encode_sentence(std::string_view text, const Vocabulary& vocab);

/// Space-joined words up to (not including) END.
std::string decode_sentence(std::span<const int> ids, const Vocabulary& vocab);
inline std::string decode_sentence(const Sentence& s, const Vocabulary& vocab) {
    return decode_sentence(s.words(), vocab);
}

}  // namespace a4nt
