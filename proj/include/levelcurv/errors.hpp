#pragma once

#include <stdexcept>
#include <string>

namespace levelcurv {

// Root of every error raised by the library. The CLI maps these to exit
// status 1 (ConfigError maps to 2).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define LEVELCURV_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

LEVELCURV_DEFINE_ERROR(ArgError);
LEVELCURV_DEFINE_ERROR(DomainError);
LEVELCURV_DEFINE_ERROR(OutOfBounds);
LEVELCURV_DEFINE_ERROR(StencilError);
LEVELCURV_DEFINE_ERROR(FormatError);
LEVELCURV_DEFINE_ERROR(CriticalPointError);
LEVELCURV_DEFINE_ERROR(GeometryError);
LEVELCURV_DEFINE_ERROR(LevelError);
LEVELCURV_DEFINE_ERROR(StabilityError);
LEVELCURV_DEFINE_ERROR(BlowupError);
LEVELCURV_DEFINE_ERROR(NumericsError);
LEVELCURV_DEFINE_ERROR(FitError);
LEVELCURV_DEFINE_ERROR(ConfigError);

#undef LEVELCURV_DEFINE_ERROR

} // namespace levelcurv
