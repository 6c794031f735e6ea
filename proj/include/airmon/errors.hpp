#ifndef AIRMON_ERRORS_HPP
#define AIRMON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace airmon {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Config text failed to parse or is missing required content.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Breakpoint rows leave a gap or overlap in concentration or index space.
class NonContiguousRows : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class OutOfRange : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

class NoTable : public Error {
public:
  using Error::Error;
};

class NotReady : public Error {
public:
  using Error::Error;
};

class MalformedDump : public Error {
public:
  using Error::Error;
};

class InvalidScenario : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace airmon

#endif
