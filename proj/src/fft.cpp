#include "qgeo/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace qgeo {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::complex<double>* p)
{
    return reinterpret_cast<fftw_complex*>(p);
}

} // namespace

Fft::Fft(std::size_t n) : n_(n)
{
    if (n == 0) {
        throw std::invalid_argument("Fft size must be positive");
    }
    std::vector<std::complex<double>> scratch(n);
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                     FFTW_FORWARD, flags);
    backward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                      FFTW_BACKWARD, flags);
    if (!forward_plan_ || !backward_plan_) {
        throw std::runtime_error("FFTW planning failed");
    }
}

Fft::~Fft()
{
    std::lock_guard lock(planner_mutex());
    if (forward_plan_) {
        fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    }
    if (backward_plan_) {
        fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
    }
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_), forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      backward_plan_(std::exchange(other.backward_plan_, nullptr))
{
}

Fft& Fft::operator=(Fft&& other) noexcept
{
    if (this != &other) {
        std::swap(n_, other.n_);
        std::swap(forward_plan_, other.forward_plan_);
        std::swap(backward_plan_, other.backward_plan_);
    }
    return *this;
}

void Fft::forward(std::span<std::complex<double>> data) const
{
    if (data.size() != n_) {
        throw std::invalid_argument("Fft::forward size mismatch");
    }
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(data.data()), as_fftw(data.data()));
}

void Fft::backward(std::span<std::complex<double>> data) const
{
    if (data.size() != n_) {
        throw std::invalid_argument("Fft::backward size mismatch");
    }
    fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), as_fftw(data.data()), as_fftw(data.data()));
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) {
        v *= scale;
    }
}

std::vector<std::vector<std::complex<double>>> spectral_derivatives(
    const Grid1D& grid, std::span<const std::complex<double>> values, int max_order, const Fft& fft)
{
    if (values.size() != grid.n_points || fft.size() != grid.n_points) {
        throw std::invalid_argument("spectral_derivatives size mismatch");
    }
    std::vector<std::complex<double>> spectrum(values.begin(), values.end());
    fft.forward(spectrum);
    const auto k = grid.wavenumbers();
    const std::size_t nyquist = grid.n_points / 2;

    std::vector<std::vector<std::complex<double>>> out;
    out.reserve(static_cast<std::size_t>(std::max(max_order, 0)));
    for (int order = 1; order <= max_order; ++order) {
        std::vector<std::complex<double>> d(spectrum.size());
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            if (order % 2 == 1 && i == nyquist) {
                d[i] = 0.0;
                continue;
            }
            std::complex<double> factor = 1.0;
            for (int j = 0; j < order; ++j) {
                factor *= std::complex<double>(0.0, k[i]);
            }
            d[i] = spectrum[i] * factor;
        }
        fft.backward(d);
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace qgeo
