#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace patchguard {

// Base of every error the toolkit raises. Callers that isolate failures per
// patch catch this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t offset)
      : Error(message + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownGrammar : public Error {
 public:
  explicit UnknownGrammar(const std::string& grammar_id)
      : Error("unknown grammar: " + grammar_id) {}
};

class NotAStatement : public Error {
 public:
  using Error::Error;
};

class GrammarMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidScript : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class CorpusNotFound : public Error {
 public:
  using Error::Error;
};

class MalformedMetadata : public Error {
 public:
  MalformedMetadata(const std::string& patch_id, const std::string& why)
      : Error("malformed metadata for " + patch_id + ": " + why), patch_id_(patch_id) {}
  const std::string& patch_id() const noexcept { return patch_id_; }

 private:
  std::string patch_id_;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class SingleClass : public Error {
 public:
  using Error::Error;
};

class TooFewMinority : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class TooFewRows : public Error {
 public:
  using Error::Error;
};

class SingleGroup : public Error {
 public:
  using Error::Error;
};

class KOutOfRange : public Error {
 public:
  using Error::Error;
};

}  // namespace patchguard
