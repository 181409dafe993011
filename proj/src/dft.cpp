#include "mrsi/dft.hpp"

#include <cmath>
#include <memory>
#include <mutex>

#include <fftw3.h>

namespace mrsi {
namespace {

// The FFTW planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

int exponent_sign(DftDirection dir, DftSign sign) {
  const bool forward_kernel = (sign == DftSign::kForward) == (dir == DftDirection::kToTime);
  return forward_kernel ? FFTW_FORWARD : FFTW_BACKWARD;
}

}  // namespace

ComplexTensor dft_trailing(const ComplexTensor& t, std::size_t n_axes, DftDirection dir,
                           DftSign sign) {
  if (n_axes == 0 || n_axes > t.rank()) {
    throw ShapeError("cannot transform " + std::to_string(n_axes) + " trailing axes of a rank-" +
                     std::to_string(t.rank()) + " tensor");
  }
  ComplexTensor out = t;
  if (out.size() == 0) return out;

  std::vector<int> n;
  std::size_t block = 1;
  for (std::size_t a = t.rank() - n_axes; a < t.rank(); ++a) {
    n.push_back(static_cast<int>(t.dim(a)));
    block *= t.dim(a);
  }
  const auto batch = static_cast<int>(t.size() / block);
  auto* buf = reinterpret_cast<fftw_complex*>(out.data());

  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_many_dft(static_cast<int>(n.size()), n.data(), batch, buf, nullptr, 1,
                                  static_cast<int>(block), buf, nullptr, 1,
                                  static_cast<int>(block), exponent_sign(dir, sign),
                                  FFTW_ESTIMATE));
  }
  if (!plan) throw Error("FFTW failed to create a plan");
  fftw_execute(plan.get());

  const double scale = 1.0 / std::sqrt(static_cast<double>(block));
  for (auto& v : out.values()) v *= scale;
  return out;
}

ComplexTensor dft_spectral(const ComplexTensor& spectra, DftDirection dir, DftSign sign) {
  if (spectra.rank() < 2) throw ShapeError("spectral tensor needs (..., N_C, N_RO) axes");
  return dft_trailing(spectra, 2, dir, sign);
}

ComplexTensor dft_spatial(const ComplexTensor& field, DftDirection dir, DftSign sign) {
  if (field.rank() < 1) throw ShapeError("spatial field needs at least one axis");
  return dft_trailing(field, field.rank(), dir, sign);
}

}  // namespace mrsi
