#pragma once

#include <stdexcept>
#include <string>

namespace gsnav {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct VersionError : Error {
  using Error::Error;
};

struct DegenerateInputError : Error {
  using Error::Error;
};

struct UnreachableError : Error {
  using Error::Error;
};

struct InvalidEndpointError : Error {
  using Error::Error;
};

struct ExhaustionError : Error {
  using Error::Error;
};

struct EpisodeError : Error {
  using Error::Error;
};

struct ProtocolError : Error {
  using Error::Error;
};

struct TransportError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct UnknownNameError : Error {
  using Error::Error;
};

struct EmptyResultError : Error {
  using Error::Error;
};

}  // namespace gsnav
