#include "lmas/tokenizer.hpp"

namespace lmas {

std::vector<TokenId> Tokenizer::tokenize(std::string_view text) const {
    std::vector<TokenId> ids;
    ids.reserve(text.size());
    for (unsigned char b : text) ids.push_back(static_cast<TokenId>(b) + static_cast<TokenId>(num_special_));
    return ids;
}

std::string Tokenizer::detokenize(const std::vector<TokenId>& ids) const {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (id < 0 || static_cast<uint32_t>(id) >= vocab_size())
            throw IdOutOfRange("token id " + std::to_string(id) + " outside vocab of " +
                               std::to_string(vocab_size()));
        if (static_cast<uint32_t>(id) < num_special_) continue;
        out.push_back(static_cast<char>(id - static_cast<TokenId>(num_special_)));
    }
    return out;
}

} // namespace lmas
