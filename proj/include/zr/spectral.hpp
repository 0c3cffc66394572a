#ifndef ZR_SPECTRAL_HPP
#define ZR_SPECTRAL_HPP

#include <complex>
#include <memory>
#include <vector>

namespace zr {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using RVec = std::vector<double>;

class FourierTransform; // opaque FFTW wrapper, defined in spectral.cpp

/// Uniform periodic collocation grid on [a,b) with an even number of nodes n,
/// together with the diagonal Fourier symbols of the collocation derivative
/// operators and cached FFT plans.
///
/// Mode ordering follows the FFT layout l = 0, 1, ..., n/2-1, -n/2(==n/2),
/// -n/2+1, ..., -1.  The first-derivative symbol zeroes the unpaired Nyquist
/// mode so the operator stays skew-symmetric; the second-derivative symbol
/// keeps the Nyquist entry -(mu*n/2)^2 so the operator stays symmetric
/// negative semi-definite.
struct SpectralGrid {
    double a = 0.0;     // left endpoint
    double b = 0.0;     // right endpoint (excluded node)
    double h = 0.0;     // node spacing (b-a)/n
    double mu = 0.0;    // fundamental wavenumber 2*pi/(b-a)
    int n = 0;          // number of nodes, even, >= 4
    RVec x;             // nodes x_j = a + j*h, j = 0..n-1
    CVec sym1;          // first-derivative symbol  i*mu*l, Nyquist entry 0
    RVec sym2;          // second-derivative symbol -(mu*l)^2, Nyquist entry kept
    std::shared_ptr<const FourierTransform> fft;
};

/// Build a grid on [a,b) with n nodes.  Throws std::invalid_argument unless
/// b > a, n is even and n >= 4.
SpectralGrid build_grid(double a, double b, int n);

/// Unnormalised forward DFT, v_hat_l = sum_j v_j exp(-i*2*pi*l*j/n), and the
/// matching inverse (which applies the 1/n).  Parseval under this convention:
/// h * sum_j |v_j|^2 = (h/n) * sum_l |v_hat_l|^2.
CVec fft_forward(const SpectralGrid& g, const CVec& v);
CVec fft_forward(const SpectralGrid& g, const RVec& v);
CVec fft_inverse(const SpectralGrid& g, const CVec& vhat);

/// Inverse DFT of a spectrum known to represent a real field: takes the real
/// part after checking the imaginary residue is below
/// 1e-11 * max(1, ||Re||_inf).  A violation signals a broken conjugate
/// symmetry and throws std::runtime_error.
RVec fft_inverse_real(const SpectralGrid& g, const CVec& vhat);

/// Pseudo-spectral first derivative (Nyquist mode annihilated).
CVec apply_d1(const SpectralGrid& g, const CVec& v);
RVec apply_d1(const SpectralGrid& g, const RVec& v);

/// Pseudo-spectral second derivative (Nyquist mode retained).
CVec apply_d2(const SpectralGrid& g, const CVec& v);
RVec apply_d2(const SpectralGrid& g, const RVec& v);

/// Discrete inner product h * sum_j u_j * conj(v_j) (conjugate-linear in v).
Complex inner(const SpectralGrid& g, const CVec& u, const CVec& v);
double inner(const SpectralGrid& g, const RVec& u, const RVec& v);

/// <apply_d2(u), u>_h evaluated in frequency space as
/// (h/n) * sum_l sym2_l |u_hat_l|^2, which is real by construction.
double inner_d2(const SpectralGrid& g, const CVec& u);

double norm_h(const SpectralGrid& g, const CVec& v);
double norm_h(const SpectralGrid& g, const RVec& v);
double norm_inf(const CVec& v);
double norm_inf(const RVec& v);

/// Imaginary-residue tolerance used when a real field round-trips through the
/// complex transform (scaled by max(1, ||field||_inf) at the check site).
inline constexpr double kImagTol = 1e-11;

} // namespace zr

#endif
