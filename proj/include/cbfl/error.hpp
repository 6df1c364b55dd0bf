#pragma once

#include <stdexcept>
#include <string>

namespace cbfl {

// Root of every error raised by the engine. Stage failures surface to the CLI
// as one of these, optionally wrapped with the stage label by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::string message, int line, int column)
        : Error("line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class UnsupportedConstruct : public Error {
public:
    UnsupportedConstruct(std::string construct, int line)
        : Error("unsupported construct '" + construct + "' at line " + std::to_string(line)),
          construct_(std::move(construct)), line_(line) {}

    const std::string &construct() const { return construct_; }
    int line() const { return line_; }

private:
    std::string construct_;
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace cbfl
