#pragma once

#include <stdexcept>
#include <string>

namespace qseg {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// No token survived normalization.
class EmptyQueryError : public Error {
public:
  using Error::Error;
};

/// Brackets or double quotes in a gold line do not pair up.
class UnbalancedDelimitersError : public Error {
public:
  using Error::Error;
};

/// Two segmentations being compared are not over the same token list.
class TokenMismatchError : public Error {
public:
  using Error::Error;
};

/// A snippet source could not be reached. Distinct from "no results":
/// an empty result set is a valid response, this is a transport failure.
class SourceUnavailableError : public Error {
public:
  using Error::Error;
};

/// A snippet source answered but the payload did not match the configured
/// selectors.
class MalformedResponseError : public Error {
public:
  using Error::Error;
};

/// A cache entry could not be decoded. Callers evict and refetch.
class CacheCorruptError : public Error {
public:
  using Error::Error;
};

/// An aggregation was requested over zero queries.
class EmptyEvaluationError : public Error {
public:
  using Error::Error;
};

/// A dataset, fixture or config file could not be parsed. The message
/// carries the file and line where the problem was found.
class ParseError : public Error {
public:
  using Error::Error;
};

}  // namespace qseg
