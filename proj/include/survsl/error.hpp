#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace survsl {

// Input errors are the caller's fault (bad file, bad argument, violated
// precondition). Numerical errors come from a fit or estimator that could not
// produce a usable answer on valid input.
enum class ErrorCategory { input, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string code, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message),
        category_(category),
        code_(std::move(code)),
        details_(std::move(details)) {}

  ErrorCategory category() const { return category_; }
  const std::string& code() const { return code_; }
  const nlohmann::json& details() const { return details_; }

  nlohmann::json to_json() const {
    return {{"error", code_},
            {"category", category_ == ErrorCategory::input ? "input" : "numerical"},
            {"message", what()},
            {"details", details_}};
  }

 private:
  ErrorCategory category_;
  std::string code_;
  nlohmann::json details_;
};

class InputError : public Error {
 public:
  InputError(std::string code, const std::string& message,
             nlohmann::json details = nlohmann::json::object())
      : Error(ErrorCategory::input, std::move(code), message, std::move(details)) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string code, const std::string& message,
                 nlohmann::json details = nlohmann::json::object())
      : Error(ErrorCategory::numerical, std::move(code), message, std::move(details)) {}
};

}  // namespace survsl
