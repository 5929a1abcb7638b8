#ifndef FRACBURGERS_ERRORS_HPP
#define FRACBURGERS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fburg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define FBURG_ERROR_TYPE(name)        \
  struct name : Error {               \
    using Error::Error;               \
  };

FBURG_ERROR_TYPE(DimensionError)
FBURG_ERROR_TYPE(ParameterError)
FBURG_ERROR_TYPE(OverflowError)
FBURG_ERROR_TYPE(RangeError)
FBURG_ERROR_TYPE(PrecisionError)
FBURG_ERROR_TYPE(CalibrationError)
FBURG_ERROR_TYPE(ScheduleError)
FBURG_ERROR_TYPE(ConstructionError)
FBURG_ERROR_TYPE(StepError)
FBURG_ERROR_TYPE(EnvelopeCollapseError)
FBURG_ERROR_TYPE(AlignmentError)
FBURG_ERROR_TYPE(ConfigError)

#undef FBURG_ERROR_TYPE

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ParameterError(what);
}

}  // namespace fburg

#endif
