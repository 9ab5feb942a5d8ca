#pragma once

#include <stdexcept>
#include <string>

namespace cv2x {

/// Raised when a scenario or input file violates a precondition.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a model computation cannot produce a result (e.g. a search diverges).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cv2x
