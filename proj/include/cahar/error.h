#ifndef CAHAR_ERROR_H_
#define CAHAR_ERROR_H_

#include <stdexcept>
#include <string>

namespace cahar {

// Broad failure categories. The CLI maps each one to its own exit code.
enum class ErrorKind {
  kConfig,
  kData,
  kProvider,
  kEvaluation,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& message) {
  return Error(ErrorKind::kConfig, message);
}
inline Error DataError(const std::string& message) {
  return Error(ErrorKind::kData, message);
}
inline Error ProviderError(const std::string& message) {
  return Error(ErrorKind::kProvider, message);
}
inline Error EvaluationError(const std::string& message) {
  return Error(ErrorKind::kEvaluation, message);
}

}  // namespace cahar

#endif  // CAHAR_ERROR_H_
