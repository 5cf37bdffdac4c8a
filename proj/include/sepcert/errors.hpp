#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sepcert {

/// Failure categories raised by the library. Every error is an `Error`
/// carrying one of these codes; the CLI maps them onto exit codes.
enum class Errc {
  NonFinite,
  NonHermitianInput,
  ConvergenceFailure,
  NotPositiveDefinite,
  EmptyList,
  DimensionMismatch,
  DimensionLimit,
  NotHermitianSum,
  DependentFactors,
  CompressionNotPSD,
  DependentPencil,
  DegenerateInput,
  NotPSDInput,
  DependentRays,
  HNotPSD,
  RankTooHigh,
  NotHermitianCores,
  FactorsOutsideSpan,
  ChoiNotPSD,
  RankNotTwo,
  OffDiagonalLeak,
  VerificationFailed,
  ParseError,
};

inline constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::NonHermitianInput: return "NonHermitianInput";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::EmptyList: return "EmptyList";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DimensionLimit: return "DimensionLimit";
    case Errc::NotHermitianSum: return "NotHermitianSum";
    case Errc::DependentFactors: return "DependentFactors";
    case Errc::CompressionNotPSD: return "CompressionNotPSD";
    case Errc::DependentPencil: return "DependentPencil";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::NotPSDInput: return "NotPSDInput";
    case Errc::DependentRays: return "DependentRays";
    case Errc::HNotPSD: return "HNotPSD";
    case Errc::RankTooHigh: return "RankTooHigh";
    case Errc::NotHermitianCores: return "NotHermitianCores";
    case Errc::FactorsOutsideSpan: return "FactorsOutsideSpan";
    case Errc::ChoiNotPSD: return "ChoiNotPSD";
    case Errc::RankNotTwo: return "RankNotTwo";
    case Errc::OffDiagonalLeak: return "OffDiagonalLeak";
    case Errc::VerificationFailed: return "VerificationFailed";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace sepcert
