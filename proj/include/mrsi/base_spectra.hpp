#pragma once

#include <span>
#include <string>
#include <vector>

#include "mrsi/geometry.hpp"
#include "mrsi/tensor.hpp"

namespace mrsi {

/// Per-substance 2D spectra over (N_C, N_RO) and their time-domain transforms.
class BaseSpectraSet {
 public:
  BaseSpectraSet() = default;

  /// `spectra` has dims (J, N_C, N_RO); the time-domain cache is derived here.
  BaseSpectraSet(std::vector<std::string> labels, ComplexTensor spectra, DftSign sign);

  std::size_t substance_count() const { return labels_.size(); }
  std::size_t spectral_points() const { return spectra_.dim(1); }
  std::size_t readout_points() const { return spectra_.dim(2); }

  const std::vector<std::string>& labels() const { return labels_; }
  const ComplexTensor& spectra() const { return spectra_; }
  const ComplexTensor& fid() const { return fid_; }

  /// Readout b_j(d, .) for a 0-based evolution index.
  std::span<const cplx> fid_row(std::size_t j, std::size_t d) const {
    const std::size_t n_ro = readout_points();
    return {fid_.data() + (j * spectral_points() + d) * n_ro, n_ro};
  }

  void check_geometry(const AcquisitionGeometry& g) const;

 private:
  std::vector<std::string> labels_;
  ComplexTensor spectra_;
  ComplexTensor fid_;
};

}  // namespace mrsi
