#pragma once

#include <stdexcept>
#include <string>

namespace tangle {

// Base for everything thrown by the library. `kind()` is a stable token used
// by the CLI for exit-code mapping and by tests.
class TangleError : public std::runtime_error {
public:
    TangleError(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define TANGLE_ERROR(NAME)                                        \
    class NAME : public TangleError {                             \
    public:                                                       \
        explicit NAME(const std::string& msg)                     \
            : TangleError(#NAME, msg) {}                          \
    }

TANGLE_ERROR(AxiomViolation);
TANGLE_ERROR(BadParameter);
TANGLE_ERROR(GroupTooLarge);
TANGLE_ERROR(UnknownRegister);
TANGLE_ERROR(DuplicateName);
TANGLE_ERROR(QuandleRequired);
TANGLE_ERROR(StaleSite);
TANGLE_ERROR(NoApplicableMove);
TANGLE_ERROR(BudgetExceeded);
TANGLE_ERROR(InconsistentColouring);
TANGLE_ERROR(InconsistentRecolouring);
TANGLE_ERROR(OverlappingDomains);
TANGLE_ERROR(SkeletonMismatch);
TANGLE_ERROR(UncolouredRegister);
TANGLE_ERROR(ColourOutOfRange);
TANGLE_ERROR(IndexOutOfRange);

#undef TANGLE_ERROR

// Parse errors carry a source position.
class SyntaxError : public TangleError {
public:
    SyntaxError(int line, int col, const std::string& msg)
        : TangleError("SyntaxError",
                      "line " + std::to_string(line) + ", col " +
                          std::to_string(col) + ": " + msg),
          line_(line), col_(col) {}
    int line() const { return line_; }
    int col() const { return col_; }

private:
    int line_;
    int col_;
};

} // namespace tangle
