#pragma once

#include <stdexcept>
#include <string>

namespace semproto {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Access or Discard chosen by a policy whose buffer is empty.
class InvalidActionError : public Error {
public:
    using Error::Error;
};

/// No rule can be formulated for the queried buffer state.
class NoRuleError : public Error {
public:
    using Error::Error;
};

/// Syntax error in a ProbLog-style model file; carries line/column.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

}  // namespace semproto
