#pragma once

#include <optional>
#include <string>

namespace ppfilter {

enum class LinkFamily { log, identity, root, logaffine };

struct PhiValue {
    double value;
    double deriv;
};

/// Intensity transformation phi: R -> [0, inf).
///
///   log          phi(x) = e^x
///   identity     phi(x) = x            (nonpositive intensities are a barrier in the likelihood)
///   root(c)      phi(x) = x^(c+1) for x >= 0, 0 for x < 0
///   logaffine(c) phi(x) = e^x for x <= c, e^c (x - c + 1) for x > c
///
/// logaffine with c = +inf is the log link.
struct LinkFunction {
    LinkFamily family{LinkFamily::log};
    double c{0.0};

    [[nodiscard]] static LinkFunction log() { return {LinkFamily::log, 0.0}; }
    [[nodiscard]] static LinkFunction identity() { return {LinkFamily::identity, 0.0}; }
    [[nodiscard]] static LinkFunction root(double c);
    [[nodiscard]] static LinkFunction logaffine(double c);

    /// Parses `log`, `identity`, `root:<c>`, `logaffine:<c>` (`logaffine:inf` allowed).
    [[nodiscard]] static LinkFunction parse(const std::string& text);
    [[nodiscard]] std::string describe() const;

    /// False for root with c <= 1, where phi' is discontinuous at 0.
    [[nodiscard]] bool continuously_differentiable() const noexcept;

    /// Inverse on the range of phi; used to start optimization at a given rate.
    [[nodiscard]] double inverse(double rate) const;
};

[[nodiscard]] PhiValue phi(const LinkFunction& link, double x);

/// log phi(x), or nullopt when phi(x) <= 0 (the likelihood is +inf there).
[[nodiscard]] std::optional<double> log_phi(const LinkFunction& link, double x);

/// phi'(x) / phi(x); only meaningful where phi(x) > 0.
[[nodiscard]] double phi_log_deriv(const LinkFunction& link, double x);

} // namespace ppfilter
