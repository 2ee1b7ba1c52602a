#pragma once

namespace qdc {

// hbar in µeV·ps, used for the fine-structure phase exp(i*S*tau/hbar).
inline constexpr double kHbarUevPs = 658.2119;

// Planck constant in µeV·ns, for converting linewidths to frequencies.
inline constexpr double kPlanckUevNs = 4.135667;

// Fourier limit of the duration-bandwidth product for Gaussian pulses.
inline constexpr double kGaussianTbpLimit = 0.4413;  // 2 ln2 / pi

}  // namespace qdc
