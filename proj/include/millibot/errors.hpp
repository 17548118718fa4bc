#pragma once

#include <stdexcept>
#include <string>

namespace millibot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MILLIBOT_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

MILLIBOT_DEFINE_ERROR(SingularityError);    // field requested too close to a coil
MILLIBOT_DEFINE_ERROR(CalibrationError);    // gain fit out of bounds or nothing driven
MILLIBOT_DEFINE_ERROR(GeometryError);       // inconsistent synthetic flow geometry
MILLIBOT_DEFINE_ERROR(GridError);           // non-rectilinear or non-uniform grid
MILLIBOT_DEFINE_ERROR(ParseError);          // malformed file contents
MILLIBOT_DEFINE_ERROR(DomainError);         // argument outside physical domain
MILLIBOT_DEFINE_ERROR(EmptyFeasibleError);  // no pixel satisfies the clearance floor
MILLIBOT_DEFINE_ERROR(NoPathError);         // start and goal not connected
MILLIBOT_DEFINE_ERROR(SolveError);          // optimizer factorization failed
MILLIBOT_DEFINE_ERROR(ConfigError);         // bad scenario or suite configuration
MILLIBOT_DEFINE_ERROR(IoError);             // file could not be read or written
MILLIBOT_DEFINE_ERROR(EmptySeriesError);    // metrics over an empty series

#undef MILLIBOT_DEFINE_ERROR

}  // namespace millibot
