#include "bandlab/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace bandlab {
namespace {
// FFTW plan creation/destruction is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

TorusFFT::TorusFFT(const TorusShape& shape) : shape_(shape) {
  const std::int64_t n = shape.size();
  buf_ = reinterpret_cast<std::complex<double>*>(
      fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n)));
  if (!buf_) throw std::bad_alloc();
  std::vector<int> dims(static_cast<std::size_t>(shape.dim), shape.side);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft(shape.dim, dims.data(),
                            reinterpret_cast<fftw_complex*>(buf_),
                            reinterpret_cast<fftw_complex*>(buf_),
                            FFTW_FORWARD, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft(shape.dim, dims.data(),
                            reinterpret_cast<fftw_complex*>(buf_),
                            reinterpret_cast<fftw_complex*>(buf_),
                            FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("fftw plan failed");
}

TorusFFT::~TorusFFT() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  if (buf_) fftw_free(buf_);
}

Eigen::VectorXcd TorusFFT::forward(const Eigen::VectorXcd& x) {
  const std::int64_t n = shape_.size();
  if (x.size() != n) throw std::invalid_argument("TorusFFT: size mismatch");
  std::copy(x.data(), x.data() + n, buf_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  return Eigen::Map<Eigen::VectorXcd>(buf_, n);
}

Eigen::VectorXcd TorusFFT::inverse(const Eigen::VectorXcd& x) {
  const std::int64_t n = shape_.size();
  if (x.size() != n) throw std::invalid_argument("TorusFFT: size mismatch");
  std::copy(x.data(), x.data() + n, buf_);
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  Eigen::VectorXcd out = Eigen::Map<Eigen::VectorXcd>(buf_, n);
  out /= static_cast<double>(n);
  return out;
}

Eigen::VectorXd circulant_row_from_modes(const TorusShape& shape,
                                         const Eigen::VectorXcd& mode_values) {
  TorusFFT fft(shape);
  Eigen::VectorXcd row = fft.inverse(mode_values);
  return row.real();
}

}  // namespace bandlab
