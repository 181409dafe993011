#pragma once

#include "mrsi/geometry.hpp"
#include "mrsi/tensor.hpp"

namespace mrsi {

/// kToTime maps spectrum (or image) to the acquired signal domain (evolution
/// time / k-space); kToFreq is its inverse.
enum class DftDirection { kToTime, kToFreq };

/// Unitary DFT over the trailing two axes (N_C, N_RO) of `spectra`; leading
/// axes are batch axes.
ComplexTensor dft_spectral(const ComplexTensor& spectra, DftDirection dir,
                           DftSign sign = DftSign::kForward);

/// Unitary DFT over every axis of a voxel-grid field.
ComplexTensor dft_spatial(const ComplexTensor& field, DftDirection dir,
                          DftSign sign = DftSign::kForward);

/// Unitary DFT over the trailing `n_axes` axes.
ComplexTensor dft_trailing(const ComplexTensor& t, std::size_t n_axes, DftDirection dir,
                           DftSign sign);

}  // namespace mrsi
