#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace blowup {

/// Raised when an argument lies outside the domain of a formula.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a numerical procedure cannot produce a trustworthy answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exponents of u_t = (u^m)_xx + |x|^sigma u^m.
///
/// m > 1 is required; sigma >= 0, with sigma = 0 the homogeneous reference
/// case. Derived constants are cached on construction.
class Params {
public:
    Params(double m, double sigma) : m_(m), sigma_(sigma) {
        if (!(m > 1.0) || !std::isfinite(m)) {
            throw DomainError("Params: m must be finite and > 1, got " + std::to_string(m));
        }
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
            throw DomainError("Params: sigma must be finite and >= 0, got " + std::to_string(sigma));
        }
        h0_ = std::sqrt(2.0 / (m + 1.0));
        alpha_ = 1.0 / (m - 1.0);
    }

    double m() const { return m_; }
    double sigma() const { return sigma_; }
    /// sqrt(2/(m+1)); Y-coordinate of P0.
    double h0() const { return h0_; }
    /// Blow-up rate exponent 1/(m-1).
    double alpha() const { return alpha_; }
    bool homogeneous() const { return sigma_ == 0.0; }

    friend bool operator==(const Params&, const Params&) = default;

private:
    double m_;
    double sigma_;
    double h0_;
    double alpha_;
};

}  // namespace blowup
