#ifndef CAUSALNET_ERRORS_HPP
#define CAUSALNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace causalnet {

// Base class for every recoverable library error. Callers that only need a
// coarse success/failure split can catch this type alone; the derived types
// exist so tests and tools can react to a specific condition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Graph construction and validation.
class CycleDetected : public Error {
 public:
  using Error::Error;
};
class RoleViolation : public Error {
 public:
  using Error::Error;
};
class UnknownNode : public Error {
 public:
  using Error::Error;
};

// Data loading and access.
class FormatError : public Error {
 public:
  using Error::Error;
};
class UnknownLevel : public Error {
 public:
  using Error::Error;
};
class MissingColumn : public Error {
 public:
  using Error::Error;
};
class RaggedRow : public Error {
 public:
  using Error::Error;
};
class NoCohortColumn : public Error {
 public:
  using Error::Error;
};
class EmptyDataset : public Error {
 public:
  using Error::Error;
};

// Parameter fitting and inference.
class IncompleteRow : public Error {
 public:
  using Error::Error;
};
class ZeroProbabilityEvent : public Error {
 public:
  using Error::Error;
};
class InconsistentEvidence : public Error {
 public:
  using Error::Error;
};

// Missingness handling.
class NotRecoverable : public Error {
 public:
  using Error::Error;
};
class ZeroObservationRate : public Error {
 public:
  using Error::Error;
};

// Causal effect estimation.
class InvalidAdjustmentSet : public Error {
 public:
  using Error::Error;
};
class ZeroProbabilityStratum : public Error {
 public:
  using Error::Error;
};

// Structure search.
class ConstraintConflict : public Error {
 public:
  using Error::Error;
};

// Evaluation.
class NodeSetMismatch : public Error {
 public:
  using Error::Error;
};
class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

// Precondition breaches that do not fit a more specific category.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace causalnet

#endif  // CAUSALNET_ERRORS_HPP
