#include "mbias/errors.hpp"

#include <utility>

namespace mbias {

Error::Error(std::string code, const std::string& what)
    : std::runtime_error(what), code_(std::move(code)) {}

}  // namespace mbias
