#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "longcot/backend.hpp"

namespace longcot::backend {

/// Deterministic offline backend. The response is a pure function of the
/// request's message contents and seed, so repeated calls are byte-identical
/// and whole pipeline runs replay exactly.
///
/// Dispatch: every registered template is keyed by a marker string; the
/// template whose marker occurs latest in the prompt wins (prompt builders
/// place their stage marker at the end). Built-in templates cover the
/// pipeline stages:
///   - flow marker        -> well-formed flow block (honors an exact-count
///                           constraint, otherwise echoes the demonstration's
///                           outline count)
///   - step marker        -> rationale segment mentioning the current step
///   - solution marker    -> final solution with a \boxed{...} answer span
///   - correctness marker -> CORRECT/INCORRECT by comparing the reference and
///                           generated answer lines in the prompt
///   - pairwise marker    -> A, B, or tie
/// register_template / load_template_file add or override entries.
class MockBackend final : public Backend {
public:
    using TemplateFn = std::function<std::string(const CompletionRequest&)>;

    MockBackend();

    Completion complete(const CompletionRequest& request) override;
    std::string name() const override { return "mock"; }

    void register_template(std::string marker, TemplateFn fn);
    void register_literal(std::string marker, std::string text);

    /// JSON file: {"templates": {"<marker>": "<literal response>"}}.
    void load_template_file(const std::filesystem::path& path);

private:
    struct Entry {
        std::string marker;
        TemplateFn fn;
        bool builtin = false;
    };
    std::vector<Entry> entries_;
};

}  // namespace longcot::backend
