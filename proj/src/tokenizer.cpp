#include "longcot/tokenizer.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace longcot::analysis {

long long WhitespaceTokenizer::count_tokens(std::string_view text) const {
    long long count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

CharRatioTokenizer::CharRatioTokenizer(double chars_per_token) : chars_per_token_(chars_per_token) {
    if (!(chars_per_token > 0.0)) {
        throw std::invalid_argument("chars_per_token must be positive");
    }
}

long long CharRatioTokenizer::count_tokens(std::string_view text) const {
    if (text.empty()) return 0;
    return static_cast<long long>(
        std::ceil(static_cast<double>(text.size()) / chars_per_token_));
}

const Tokenizer& default_tokenizer() {
    static const WhitespaceTokenizer tok;
    return tok;
}

}  // namespace longcot::analysis
