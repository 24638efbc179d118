#pragma once

#include <stdexcept>
#include <string>

namespace gridcal {

// Every failure mode the library can report. Tests match on the kind,
// messages are for humans.
enum class ErrorKind {
  DegenerateDepth,
  SingularIntrinsics,
  GimbalDegenerate,
  InvalidRotation,
  MalformedPgm,
  NotSimpleBoundary,
  TooFewPoints,
  DegeneratePoints,
  ParallelLines,
  WrongBoxCount,
  TooFewResponses,
  RankDeficient,
  DegenerateViews,
  InsufficientViews,
  NegativeDiscriminant,
  DegenerateHomography,
  IllConditioned,
  NoRealRoot,
  NoConvergence,
  NonFinite,
  PoseOutOfFrame,
  RayParallelToPlane,
  DegenerateLine,
  BadConfig,
  IoError,
};

const char* to_string(ErrorKind kind);

class CalibError : public std::runtime_error {
 public:
  CalibError(ErrorKind kind, const std::string& message, long detail = 0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(detail) {}

  ErrorKind kind() const { return kind_; }

  // Extra numeric payload, e.g. the box count found by extract_corners or
  // the view index of an out-of-frame pose.
  long detail() const { return detail_; }

 private:
  ErrorKind kind_;
  long detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              long detail = 0) {
  throw CalibError(kind, message, detail);
}

}  // namespace gridcal
