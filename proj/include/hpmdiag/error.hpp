#pragma once

#include <stdexcept>
#include <string>

namespace hpmdiag {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened or read.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (JSON, CSV, group file). `context` names the line,
// element path or column where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& context, const std::string& message)
      : Error(context.empty() ? message : context + ": " + message),
        context_(context),
        message_(message) {}
  const std::string& context() const noexcept { return context_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string context_;
  std::string message_;
};

// Well-formed input that breaks a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnknownEvent : public Error {
 public:
  explicit UnknownEvent(const std::string& event) : Error("unknown event: " + event), event_(event) {}
  const std::string& event() const noexcept { return event_; }

 private:
  std::string event_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NoTimeline : public Error {
 public:
  explicit NoTimeline(const std::string& region) : Error("region '" + region + "' has no timeline") {}
};

class EmptySlice : public Error {
 public:
  using Error::Error;
};

// Group-file grammar violation at a 1-based line/column.
class SyntaxError : public ParseError {
 public:
  SyntaxError(int line, int column, const std::string& message)
      : ParseError(std::to_string(line) + ":" + std::to_string(column), message),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class UnknownSlotError : public ParseError {
 public:
  UnknownSlotError(const std::string& context, const std::string& slot)
      : ParseError(context, "formula references undeclared slot " + slot), slot_(slot) {}
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class UnknownMetric : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class NotComputable : public Error {
 public:
  using Error::Error;
};

class UnsupportedPattern : public Error {
 public:
  using Error::Error;
};

}  // namespace hpmdiag
