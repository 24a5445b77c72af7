#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "qgeo/grid.hpp"

namespace qgeo {

// In-place 1D complex transform of fixed size. Plans use FFTW_ESTIMATE so that
// repeated runs pick the same algorithm and produce bit-identical output.
// Executing a plan is thread-safe; construction is serialized internally.
class Fft {
public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    Fft(Fft&& other) noexcept;
    Fft& operator=(Fft&& other) noexcept;

    std::size_t size() const { return n_; }
    void forward(std::span<std::complex<double>> data) const;
    // Scaled by 1/n, so backward(forward(x)) == x.
    void backward(std::span<std::complex<double>> data) const;

private:
    std::size_t n_ = 0;
    void* forward_plan_ = nullptr;
    void* backward_plan_ = nullptr;
};

// Derivatives d^j/dx^j of a periodic field for j = 1..max_order.
// Odd orders drop the Nyquist mode.
std::vector<std::vector<std::complex<double>>> spectral_derivatives(
    const Grid1D& grid, std::span<const std::complex<double>> values, int max_order, const Fft& fft);

} // namespace qgeo
