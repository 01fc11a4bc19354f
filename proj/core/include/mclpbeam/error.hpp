// error.hpp
// Exception hierarchy shared by every mclpbeam module.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mclpbeam {

enum class ErrorKind {
    kInvalidInput,
    kConfiguration,
    kNumericalFailure,
    kDegenerateBin,
    kDegenerateMask,
    kDivergedTraining,
    kIo,
};

const char *ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what,
          std::optional<int> bin = std::nullopt)
        : std::runtime_error(Format(kind, what, bin)), kind_(kind), bin_(bin) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Frequency bin the failure refers to, when there is one.
    std::optional<int> bin() const noexcept { return bin_; }

private:
    static std::string Format(ErrorKind kind, const std::string &what,
                              std::optional<int> bin) {
        std::string msg = std::string(ErrorKindName(kind)) + ": " + what;
        if (bin) msg += " (bin " + std::to_string(*bin) + ")";
        return msg;
    }

    ErrorKind kind_;
    std::optional<int> bin_;
};

inline const char *ErrorKindName(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kInvalidInput: return "invalid input";
        case ErrorKind::kConfiguration: return "configuration error";
        case ErrorKind::kNumericalFailure: return "numerical failure";
        case ErrorKind::kDegenerateBin: return "degenerate bin";
        case ErrorKind::kDegenerateMask: return "degenerate mask";
        case ErrorKind::kDivergedTraining: return "diverged training";
        case ErrorKind::kIo: return "i/o error";
    }
    return "error";
}

}  // namespace mclpbeam
