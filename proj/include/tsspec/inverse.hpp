#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tsspec/poly.hpp"
#include "tsspec/propagation.hpp"
#include "tsspec/spectral.hpp"
#include "tsspec/timescale.hpp"

namespace tss {

enum class InputKind { WeylFunction, TwoSpectra, SpectrumPlusWeights };

const char* to_string(InputKind kind);
/// "weyl", "two-spectra", "spectrum-weights".  Throws ParseError.
InputKind parse_input_kind(const std::string& s);

/// Spectral data of one of the three equivalent kinds, for a fixed geometry.
struct SpectralInput {
    InputKind kind = InputKind::TwoSpectra;
    /// WeylFunction: exact M = num / den.
    std::optional<WeylFunction> weyl;
    /// TwoSpectra: both; SpectrumPlusWeights: spectrum1 only.
    Spectrum spectrum0, spectrum1;
    WeightNumbers weights;
    /// Reject data that are not exactly representable.
    bool strict = false;
};

/// (Theta_0, Theta_1) on a discrete scale from any kind of spectral data.
/// Throws NotSupported, WrongCount, LengthMismatch, NotExact, InconsistentData.
ExactPair normalize_input(const SpectralInput& input, const TimeScale& ts);

struct RecoveryStep {
    std::size_t m = 0;
    PolyRat d0, d1;     ///< D_0^m, D_1^m
    PolyRat d0_next;    ///< D_0^{m+1}
    PolyRat quotient;   ///< D_0^m = quotient * D_0^{m+1} + remainder
    PolyRat remainder;
    PolyRat d1_next;    ///< D_1^{m+1}
    Rational q;         ///< q(a_m)
};

struct RecoveryTrace {
    std::vector<RecoveryStep> steps;
};

struct Recovery {
    std::vector<Rational> q; ///< q(a_1) .. q(a_{M-2})
    Potential potential;
    RecoveryTrace trace;
};

/// Recovers q at a_1..a_{M-2} from the characteristic pair, then checks the
/// result by forward propagation.  Throws NotSupported (N > 0 or M < 3),
/// DivisionDegenerate, NonLinearQuotient, InconsistentData.
Recovery algorithm1(const PolyRat& theta0, const PolyRat& theta1, const TimeScale& ts);

/// The chosen kind of spectral data, extracted from the forward problem.
SpectralInput spectral_data(const TimeScale& ts, const Potential& q, InputKind kind);

struct RoundtripReport {
    InputKind kind = InputKind::TwoSpectra;
    bool pass = false;
    std::vector<Rational> original, recovered;
    std::string error;
};

/// forward -> spectral data -> normalize_input -> algorithm1 -> compare.
RoundtripReport roundtrip_check(const TimeScale& ts, const Potential& q, InputKind kind);

} // namespace tss
