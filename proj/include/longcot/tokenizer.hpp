#pragma once

#include <string>
#include <string_view>

namespace longcot::analysis {

/// Pluggable token counter. Thought-budget accounting never depends on a
/// specific vendor tokenizer; callers inject whichever implementation they
/// want to count with.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual long long count_tokens(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// Counts whitespace-separated tokens. Deterministic and dependency-free;
/// the default for tests and for generated_thought_tokens bookkeeping.
class WhitespaceTokenizer final : public Tokenizer {
public:
    long long count_tokens(std::string_view text) const override;
    std::string name() const override { return "whitespace"; }
};

/// Byte-pair-style approximation: ceil(bytes / chars_per_token). Stands in
/// where a real subword tokenizer would be plugged behind the interface.
class CharRatioTokenizer final : public Tokenizer {
public:
    explicit CharRatioTokenizer(double chars_per_token = 4.0);
    long long count_tokens(std::string_view text) const override;
    std::string name() const override { return "char-ratio"; }

private:
    double chars_per_token_;
};

const Tokenizer& default_tokenizer();

}  // namespace longcot::analysis
