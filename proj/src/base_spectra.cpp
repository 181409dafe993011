#include "mrsi/base_spectra.hpp"

#include "mrsi/dft.hpp"

namespace mrsi {

BaseSpectraSet::BaseSpectraSet(std::vector<std::string> labels, ComplexTensor spectra,
                               DftSign sign)
    : labels_(std::move(labels)), spectra_(std::move(spectra)) {
  if (spectra_.rank() != 3) throw ShapeError("base spectra must be (J, N_C, N_RO)");
  if (spectra_.dim(0) == 0) throw ShapeError("base spectra need at least one substance");
  if (labels_.size() != spectra_.dim(0)) {
    throw ShapeError("got " + std::to_string(labels_.size()) + " labels for " +
                     std::to_string(spectra_.dim(0)) + " base spectra");
  }
  fid_ = dft_spectral(spectra_, DftDirection::kToTime, sign);
}

void BaseSpectraSet::check_geometry(const AcquisitionGeometry& g) const {
  if (spectral_points() != static_cast<std::size_t>(g.spectral_points) ||
      readout_points() != static_cast<std::size_t>(g.readout_points)) {
    throw ShapeError("base spectra grid (" + std::to_string(spectral_points()) + " x " +
                     std::to_string(readout_points()) + ") does not match geometry (" +
                     std::to_string(g.spectral_points) + " x " +
                     std::to_string(g.readout_points) + ")");
  }
}

}  // namespace mrsi
