#include "zr/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace zr {

namespace {
// FFTW's planner mutates global state; serialize plan creation/destruction.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

/// Out-of-place complex-to-complex FFTW plans of fixed length, executed with
/// the new-array interface so one instance serves any number of buffers.
/// FFTW_ESTIMATE keeps planning deterministic; FFTW_UNALIGNED lets plans run
/// on std::vector storage of any alignment.
class FourierTransform {
public:
    explicit FourierTransform(int n) : n_(n) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        scratch_in_ = fftw_alloc_complex(static_cast<size_t>(n));
        scratch_out_ = fftw_alloc_complex(static_cast<size_t>(n));
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft_1d(n, scratch_in_, scratch_out_, FFTW_FORWARD, flags);
        bwd_ = fftw_plan_dft_1d(n, scratch_in_, scratch_out_, FFTW_BACKWARD, flags);
        if (!fwd_ || !bwd_) throw std::runtime_error("FFTW plan creation failed");
    }

    ~FourierTransform() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(scratch_in_);
        fftw_free(scratch_out_);
    }

    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;

    void forward(const Complex* in, Complex* out) const {
        fftw_execute_dft(fwd_,
                         reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    void backward(const Complex* in, Complex* out) const {
        fftw_execute_dft(bwd_,
                         reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    int n() const { return n_; }

private:
    int n_;
    fftw_complex* scratch_in_;
    fftw_complex* scratch_out_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

SpectralGrid build_grid(double a, double b, int n) {
    if (!(b > a)) throw std::invalid_argument("build_grid: require b > a");
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("build_grid: require even n >= 4");
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("build_grid: endpoints must be finite");

    SpectralGrid g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.h = (b - a) / n;
    g.mu = 2.0 * std::numbers::pi / (b - a);
    g.x.resize(n);
    for (int j = 0; j < n; ++j) g.x[j] = a + j * g.h;

    g.sym1.resize(n);
    g.sym2.resize(n);
    for (int j = 0; j < n; ++j) {
        const int l = (j <= n / 2) ? j : j - n; // l = n/2 at the Nyquist slot
        const double k = g.mu * l;
        g.sym1[j] = (j == n / 2) ? Complex(0.0, 0.0) : Complex(0.0, k);
        g.sym2[j] = -k * k;
    }
    g.fft = std::make_shared<const FourierTransform>(n);
    return g;
}

CVec fft_forward(const SpectralGrid& g, const CVec& v) {
    CVec out(v.size());
    g.fft->forward(v.data(), out.data());
    return out;
}

CVec fft_forward(const SpectralGrid& g, const RVec& v) {
    CVec tmp(v.size());
    std::copy(v.begin(), v.end(), tmp.begin());
    CVec out(v.size());
    g.fft->forward(tmp.data(), out.data());
    return out;
}

CVec fft_inverse(const SpectralGrid& g, const CVec& vhat) {
    CVec out(vhat.size());
    g.fft->backward(vhat.data(), out.data());
    const double scale = 1.0 / g.n;
    for (auto& z : out) z *= scale;
    return out;
}

RVec fft_inverse_real(const SpectralGrid& g, const CVec& vhat) {
    const CVec full = fft_inverse(g, vhat);
    double max_re = 0.0, max_im = 0.0;
    for (const auto& z : full) {
        max_re = std::max(max_re, std::abs(z.real()));
        max_im = std::max(max_im, std::abs(z.imag()));
    }
    if (!(max_im <= kImagTol * std::max(1.0, max_re)))
        throw std::runtime_error("fft_inverse_real: imaginary residue exceeds tolerance");
    RVec out(full.size());
    for (size_t j = 0; j < full.size(); ++j) out[j] = full[j].real();
    return out;
}

namespace {
CVec apply_symbol_c(const SpectralGrid& g, const CVec& v, int order) {
    CVec vhat = fft_forward(g, v);
    if (order == 1) {
        for (int j = 0; j < g.n; ++j) vhat[j] *= g.sym1[j];
    } else {
        for (int j = 0; j < g.n; ++j) vhat[j] *= g.sym2[j];
    }
    return fft_inverse(g, vhat);
}

RVec apply_symbol_r(const SpectralGrid& g, const RVec& v, int order) {
    CVec tmp(v.size());
    std::copy(v.begin(), v.end(), tmp.begin());
    CVec vhat = fft_forward(g, tmp);
    if (order == 1) {
        for (int j = 0; j < g.n; ++j) vhat[j] *= g.sym1[j];
    } else {
        for (int j = 0; j < g.n; ++j) vhat[j] *= g.sym2[j];
    }
    return fft_inverse_real(g, vhat);
}
} // namespace

CVec apply_d1(const SpectralGrid& g, const CVec& v) { return apply_symbol_c(g, v, 1); }
RVec apply_d1(const SpectralGrid& g, const RVec& v) { return apply_symbol_r(g, v, 1); }
CVec apply_d2(const SpectralGrid& g, const CVec& v) { return apply_symbol_c(g, v, 2); }
RVec apply_d2(const SpectralGrid& g, const RVec& v) { return apply_symbol_r(g, v, 2); }

Complex inner(const SpectralGrid& g, const CVec& u, const CVec& v) {
    Complex s(0.0, 0.0);
    for (size_t j = 0; j < u.size(); ++j) s += u[j] * std::conj(v[j]);
    return g.h * s;
}

double inner(const SpectralGrid& g, const RVec& u, const RVec& v) {
    double s = 0.0;
    for (size_t j = 0; j < u.size(); ++j) s += u[j] * v[j];
    return g.h * s;
}

double inner_d2(const SpectralGrid& g, const CVec& u) {
    const CVec uhat = fft_forward(g, u);
    double s = 0.0;
    for (int j = 0; j < g.n; ++j) s += g.sym2[j] * std::norm(uhat[j]);
    return g.h / g.n * s;
}

double norm_h(const SpectralGrid& g, const CVec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(g.h * s);
}

double norm_h(const SpectralGrid& g, const RVec& v) {
    double s = 0.0;
    for (double r : v) s += r * r;
    return std::sqrt(g.h * s);
}

double norm_inf(const CVec& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

double norm_inf(const RVec& v) {
    double m = 0.0;
    for (double r : v) m = std::max(m, std::abs(r));
    return m;
}

} // namespace zr
