#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace emokd {

// Process exit codes used by the CLI when an error escapes a command.
enum class ErrorClass : int {
  usage = 2,             // bad arguments, bad config, invalid values
  missing_artifact = 3,  // required checkpoint / stage output absent
  training = 4,          // training failed to converge
  io = 5,                // filesystem, file-format or client failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string msg)
      : std::runtime_error(std::move(msg)), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

#define EMOKD_ERROR(Name, Cls)                       \
  class Name : public Error {                        \
   public:                                           \
    explicit Name(std::string msg)                   \
        : Error(ErrorClass::Cls, std::move(msg)) {}  \
  }

EMOKD_ERROR(InvalidInput, usage);
EMOKD_ERROR(InvalidTemperature, usage);
EMOKD_ERROR(InvalidAlpha, usage);
EMOKD_ERROR(OutOfVocabulary, usage);
EMOKD_ERROR(UnparseableResponse, usage);
EMOKD_ERROR(ShapeError, usage);
EMOKD_ERROR(EmptyDataset, usage);
EMOKD_ERROR(SplitTooSmall, usage);
EMOKD_ERROR(InfeasibleSpec, usage);
EMOKD_ERROR(InvalidGrid, usage);
EMOKD_ERROR(ConfigError, usage);
EMOKD_ERROR(UsageError, usage);

EMOKD_ERROR(LayoutError, io);
EMOKD_ERROR(SchemaError, io);
EMOKD_ERROR(DuplicateSample, io);
EMOKD_ERROR(IoError, io);
EMOKD_ERROR(ExtractionError, io);

EMOKD_ERROR(MissingArtifact, missing_artifact);

#undef EMOKD_ERROR

class ParseError : public Error {
 public:
  ParseError(std::string msg, std::size_t line)
      : Error(ErrorClass::io, msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class GenerationError : public Error {
 public:
  GenerationError(std::string msg, std::string sample_id)
      : Error(ErrorClass::io, msg + " [sample " + sample_id + "]"),
        sample_id_(std::move(sample_id)) {}
  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  std::string sample_id_;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::string msg, std::size_t epoch)
      : Error(ErrorClass::training,
              msg + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace emokd
