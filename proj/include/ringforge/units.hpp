#pragma once

#include <cmath>

// Interface quantities use the units of the device tables (uOhm*cm, nm, um,
// pH/sq, uH, fF, GHz, kOhm, K, dBm). Everything is converted to SI at module
// boundaries through the factors below; intermediate math is SI only.

namespace ringforge::units {

// CODATA 2018, 12 significant digits.
inline constexpr double hbar_J_s = 1.05457181765e-34;
inline constexpr double boltzmann_J_per_K = 1.380649e-23;  // exact

inline constexpr double pi = 3.14159265358979323846;

// Multiplicative factors: value_in_unit * factor == value_in_SI.
inline constexpr double uohm_cm_to_ohm_m = 1e-8;
inline constexpr double nm_to_m = 1e-9;
inline constexpr double um_to_m = 1e-6;
inline constexpr double pH_to_H = 1e-12;
inline constexpr double uH_to_H = 1e-6;
inline constexpr double fF_to_F = 1e-15;
inline constexpr double GHz_to_Hz = 1e9;
inline constexpr double kohm_to_ohm = 1e3;
inline constexpr double um3_to_m3 = 1e-18;

inline double dbm_to_watt(double p_dbm) { return 1e-3 * std::pow(10.0, p_dbm / 10.0); }
inline double watt_to_dbm(double p_w) { return 10.0 * std::log10(p_w / 1e-3); }

}  // namespace ringforge::units
