#pragma once

#include <stdexcept>
#include <string>

namespace coq {

// Base class for every failure the pipeline reports by exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Table ingestion.
class MalformedInput : public Error {
 public:
  using Error::Error;
};

class EmptyTable : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// LLM access.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class ReplayMiss : public Error {
 public:
  using Error::Error;
};

// Response parsing.
class NoSqlFound : public Error {
 public:
  using Error::Error;
};

class NoDecisionFound : public Error {
 public:
  using Error::Error;
};

// Sandbox could not be created or loaded. Distinct from SqlError, which is a
// value describing a rejected query.
class EngineFailure : public Error {
 public:
  using Error::Error;
};

// Evaluation.
class MalformedDataset : public Error {
 public:
  using Error::Error;
};

class IdMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace coq
