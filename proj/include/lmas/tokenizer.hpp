#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmas/errors.hpp"

namespace lmas {

using TokenId = int32_t;

/// Byte-level tokenizer: byte b maps to id b + num_special. Ids below
/// num_special are reserved control tokens. Training-free and lossless:
/// detokenize(tokenize(s)) == s for every byte string s.
class Tokenizer {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kRoleOpen = 2;
    static constexpr TokenId kRoleClose = 3;

    explicit Tokenizer(uint32_t num_special = 4) : num_special_(num_special) {}

    uint32_t num_special() const { return num_special_; }
    uint32_t vocab_size() const { return 256 + num_special_; }

    std::vector<TokenId> tokenize(std::string_view text) const;

    /// Control ids render as empty; ids >= vocab_size raise IdOutOfRange.
    std::string detokenize(const std::vector<TokenId>& ids) const;

private:
    uint32_t num_special_;
};

} // namespace lmas
