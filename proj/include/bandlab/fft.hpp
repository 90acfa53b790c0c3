#pragma once

#include <Eigen/Dense>
#include <complex>

#include "bandlab/torus.hpp"

namespace bandlab {

// d-dimensional complex DFT over the torus in flatten (row-major) layout.
// forward() is unnormalized; inverse() divides by N^d. Instances are not
// thread-safe; create one per thread.
class TorusFFT {
 public:
  explicit TorusFFT(const TorusShape& shape);
  ~TorusFFT();
  TorusFFT(const TorusFFT&) = delete;
  TorusFFT& operator=(const TorusFFT&) = delete;

  Eigen::VectorXcd forward(const Eigen::VectorXcd& x);
  Eigen::VectorXcd inverse(const Eigen::VectorXcd& x);

  const TorusShape& shape() const { return shape_; }

 private:
  TorusShape shape_;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  std::complex<double>* buf_ = nullptr;
};

// Pointwise function of the circulant symbol: given the real symbol of a
// symmetric circulant kernel and per-mode values f(symbol_p), return the
// kernel row r[u] = (1/N^d) sum_p f(symbol_p) e^{2 pi i <p,u>/N}; imaginary
// parts (roundoff) are discarded.
Eigen::VectorXd circulant_row_from_modes(const TorusShape& shape,
                                         const Eigen::VectorXcd& mode_values);

}  // namespace bandlab
