#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace plure {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Block view of a stacked state: row i is the i-th d-dimensional block.
template <typename Scalar>
using BlockMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using GradientOracle = std::function<Vector<Scalar>(const Vector<Scalar>&)>;

enum class ErrorCode {
  DimensionMismatch,
  SingularTransform,
  FeedthroughPresent,
  InvalidOutputForm,
  PointOutsideSet,
  InvalidSet,
  NotPositiveDefinite,
  InnerSolverDiverged,
  InvalidSector,
  InvalidArgument,
  MaxIterationsExceeded,
  NonFiniteIterate,
  InsufficientData,
  NegativeLambda,
  NoCertificate,
  UnverifiedCertificate,
  ConfigError,
};

inline const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::FeedthroughPresent: return "FeedthroughPresent";
    case ErrorCode::InvalidOutputForm: return "InvalidOutputForm";
    case ErrorCode::PointOutsideSet: return "PointOutsideSet";
    case ErrorCode::InvalidSet: return "InvalidSet";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InnerSolverDiverged: return "InnerSolverDiverged";
    case ErrorCode::InvalidSector: return "InvalidSector";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::NoCertificate: return "NoCertificate";
    case ErrorCode::UnverifiedCertificate: return "UnverifiedCertificate";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": expected " + std::to_string(want) + ", got " +
                    std::to_string(got));
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace plure
