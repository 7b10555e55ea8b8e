#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mindrel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions (maps to CLI exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

enum class DataErrorKind {
    MissingFile,
    MissingLabelColumn,
    MissingCell,
    RaggedRow,
    EmptyDataset,
    ShapeMismatch,
    Malformed,
};

// Problems with input data or artifacts (exit code 2).
class DataError : public Error {
public:
    DataError(DataErrorKind kind, std::string const& message,
              std::optional<std::size_t> row = std::nullopt, std::string column = {})
        : Error(message)
        , kind_(kind)
        , row_(row)
        , column_(std::move(column))
    {
    }

    [[nodiscard]] auto kind() const noexcept -> DataErrorKind { return kind_; }
    // 1-based line number in the source file, header included
    [[nodiscard]] auto row() const noexcept -> std::optional<std::size_t> { return row_; }
    [[nodiscard]] auto column() const noexcept -> std::string const& { return column_; }

private:
    DataErrorKind kind_;
    std::optional<std::size_t> row_;
    std::string column_;
};

// Factorization failures, non-finite losses (exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace mindrel
