#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scrabble {

// Every error the library raises derives from Error so the CLI can map
// categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or model shape (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeConfigError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Problems with input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class UnknownCharacter : public DataError {
 public:
  UnknownCharacter(std::size_t position, char ch)
      : DataError("unknown character '" + std::string(1, ch) + "' at position " +
                  std::to_string(position)),
        position_(position),
        ch_(ch) {}

  std::size_t position() const noexcept { return position_; }
  char character() const noexcept { return ch_; }

 private:
  std::size_t position_;
  char ch_;
};

class UnreadableImage : public DataError {
 public:
  explicit UnreadableImage(const std::string& path, const std::string& why = {})
      : DataError("unreadable image: " + path + (why.empty() ? "" : " (" + why + ")")),
        path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class MissingCheckpoint : public DataError {
 public:
  using DataError::DataError;
};

class WidthTooSmall : public DataError {
 public:
  WidthTooSmall(int width, int minimum)
      : DataError("image width " + std::to_string(width) + " is below the minimum of " +
                  std::to_string(minimum)),
        width_(width),
        minimum_(minimum) {}
  int width() const noexcept { return width_; }
  int minimum() const noexcept { return minimum_; }

 private:
  int width_;
  int minimum_;
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class EmptyTruth : public DataError {
 public:
  using DataError::DataError;
};

// Numerical failures (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InfeasibleTarget : public NumericalError {
 public:
  InfeasibleTarget(int frames, int required)
      : NumericalError("CTC target needs at least " + std::to_string(required) +
                       " frames but only " + std::to_string(frames) + " are available"),
        frames_(frames),
        required_(required) {}
  int frames() const noexcept { return frames_; }
  int required() const noexcept { return required_; }

 private:
  int frames_;
  int required_;
};

class DegenerateGradient : public NumericalError {
 public:
  DegenerateGradient() : NumericalError("recognizer gradient has zero standard deviation") {}
};

class NonFiniteLoss : public NumericalError {
 public:
  NonFiniteLoss(long step, const std::string& what)
      : NumericalError("non-finite " + what + " at step " + std::to_string(step)), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace scrabble
