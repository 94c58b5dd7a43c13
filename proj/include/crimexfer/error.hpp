#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crimexfer {

// Exit-code families used by the command-line tool.
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateTract : public DataError {
public:
    explicit DuplicateTract(const std::string& id)
        : DataError("duplicate tract id '" + id + "'"), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

#define CRIMEXFER_DATA_ERROR(Name)                                      \
    class Name : public DataError {                                     \
    public:                                                             \
        explicit Name(const std::string& what) : DataError(what) {}     \
    }

CRIMEXFER_DATA_ERROR(InvalidDate);
CRIMEXFER_DATA_ERROR(WindowOutOfRange);
CRIMEXFER_DATA_ERROR(InsufficientHistory);
CRIMEXFER_DATA_ERROR(EmptyWindow);
CRIMEXFER_DATA_ERROR(NotEnoughTracts);
CRIMEXFER_DATA_ERROR(ArityError);
CRIMEXFER_DATA_ERROR(ShapeError);
CRIMEXFER_DATA_ERROR(FormatVersionError);
CRIMEXFER_DATA_ERROR(CorruptFile);
CRIMEXFER_DATA_ERROR(ArchitectureMismatch);
CRIMEXFER_DATA_ERROR(EmptyTrainingSet);
CRIMEXFER_DATA_ERROR(DomainMismatch);
CRIMEXFER_DATA_ERROR(EmptyDomain);
CRIMEXFER_DATA_ERROR(InvalidF1);
CRIMEXFER_DATA_ERROR(InvalidDataset);
CRIMEXFER_DATA_ERROR(IoError);

#undef CRIMEXFER_DATA_ERROR

} // namespace crimexfer
