#pragma once

#include <stdexcept>
#include <string>

namespace damvi {

enum class Errc {
    invalid_argument,
    missing_file,
    missing_column,
    parse_error,
    empty_dataset,
    single_class,
    dimension_mismatch,
    length_mismatch,
    degenerate_denominator,
    bound_inapplicable,
};

/// Broad category of an error, used by the CLI to choose an exit status.
enum class ErrorCategory { usage, data, numerical };

constexpr ErrorCategory category_of(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument:
        return ErrorCategory::usage;
    case Errc::degenerate_denominator:
    case Errc::bound_inapplicable:
        return ErrorCategory::numerical;
    default:
        return ErrorCategory::data;
    }
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    Errc code_;
};

} // namespace damvi
