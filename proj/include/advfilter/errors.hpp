#pragma once

#include <stdexcept>
#include <string>

namespace advfilter {

// Base class for every typed data error the toolkit raises. The CLI maps
// these to exit code 2; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ADVFILTER_DEFINE_ERROR(NAME)            \
  class NAME : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  }

// frame_io
ADVFILTER_DEFINE_ERROR(MalformedHeader);
ADVFILTER_DEFINE_ERROR(TruncatedFrame);
ADVFILTER_DEFINE_ERROR(UnsupportedColorspace);
ADVFILTER_DEFINE_ERROR(BadMaxval);
ADVFILTER_DEFINE_ERROR(TruncatedPixelData);
ADVFILTER_DEFINE_ERROR(SchemaViolation);
ADVFILTER_DEFINE_ERROR(IoError);

// tinynet / attack
ADVFILTER_DEFINE_ERROR(ShapeMismatch);

// features
ADVFILTER_DEFINE_ERROR(DimensionMismatch);
ADVFILTER_DEFINE_ERROR(FrameTooSmall);

// isoforest
ADVFILTER_DEFINE_ERROR(TooFewPoints);
ADVFILTER_DEFINE_ERROR(NonFiniteFeature);
ADVFILTER_DEFINE_ERROR(NotFitted);
ADVFILTER_DEFINE_ERROR(SerializationError);

// pipeline
ADVFILTER_DEFINE_ERROR(EmptyDataset);
ADVFILTER_DEFINE_ERROR(WarmupTooShort);

// eval
ADVFILTER_DEFINE_ERROR(UnknownTruth);
ADVFILTER_DEFINE_ERROR(EmptyMatrix);
ADVFILTER_DEFINE_ERROR(SingleClass);

// report
ADVFILTER_DEFINE_ERROR(MissingInput);

#undef ADVFILTER_DEFINE_ERROR

}  // namespace advfilter
