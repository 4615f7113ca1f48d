#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace eotx {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J/K
inline constexpr double picowatt = 1e-12;

/// Hz -> rad/s
constexpr double from_hz(double nu) { return two_pi * nu; }
/// rad/s -> Hz
constexpr double to_hz(double omega) { return omega / two_pi; }

/// Input outside the domain of a formula (zero detuning, empty data, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

} // namespace eotx
