#include "zr/oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace zr {

Eigen::MatrixXd dense_diff_matrix(const SpectralGrid& g, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("dense_diff_matrix: order must be 1 or 2");
    const int n = g.n;
    Eigen::MatrixXd D(n, n);
    // Entries depend only on j-k; build one row of symbol sums and roll it.
    std::vector<Complex> row(n);
    for (int d = 0; d < n; ++d) {
        Complex acc(0.0, 0.0);
        for (int l = -n / 2; l <= n / 2; ++l) {
            const double al = (std::abs(l) == n / 2) ? 2.0 : 1.0;
            const Complex ilmu(0.0, l * g.mu);
            const Complex sym = (order == 1) ? ilmu : ilmu * ilmu;
            const double theta = 2.0 * std::numbers::pi * l * d / n;
            acc += sym / al * Complex(std::cos(theta), std::sin(theta));
        }
        row[d] = acc / static_cast<double>(n);
    }
    double maxImag = 0.0, maxAbs = 0.0;
    for (const auto& z : row) {
        maxImag = std::max(maxImag, std::abs(z.imag()));
        maxAbs = std::max(maxAbs, std::abs(z));
    }
    if (maxImag > 1e-9 * std::max(1.0, maxAbs))
        throw std::runtime_error("dense_diff_matrix: symbol sum not real");
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) D(j, k) = row[((j - k) % n + n) % n].real();
    return D;
}

CVec apply_dense(const Eigen::MatrixXd& D, const CVec& v) {
    const int n = static_cast<int>(v.size());
    CVec out(n, Complex(0.0, 0.0));
    for (int j = 0; j < n; ++j) {
        Complex acc(0.0, 0.0);
        for (int k = 0; k < n; ++k) acc += D(j, k) * v[k];
        out[j] = acc;
    }
    return out;
}

RVec apply_dense(const Eigen::MatrixXd& D, const RVec& v) {
    const int n = static_cast<int>(v.size());
    RVec out(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += D(j, k) * v[k];
        out[j] = acc;
    }
    return out;
}

double quadrature(const std::function<double(double)>& f, double a, double b,
                  double tol) {
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15,
                                                                         tol);
}

namespace {

/// Residual of the stage equations with dense spatial operators, on the real
/// unknown layout [Re k1 | Im k1 | k2 | k3], each block s*n long.
class StageResidual {
public:
    StageResidual(const Params& p, const SpectralGrid& g, const Tableau& t,
                  double tau, const FieldState& st)
        : p_(p), t_(t), tau_(tau), st_(st), n_(g.n),
          D1_(dense_diff_matrix(g, 1)), D2_(dense_diff_matrix(g, 2)) {}

    int dim() const { return 4 * t_.s * n_; }

    Eigen::VectorXd operator()(const Eigen::VectorXd& z) const {
        const int s = t_.s;
        const int n = n_;
        std::vector<CVec> k1(s, CVec(n)), Bn(s, CVec(n));
        std::vector<RVec> k2(s, RVec(n)), k3(s, RVec(n));
        std::vector<RVec> rhoN(s, RVec(n)), uN(s, RVec(n)), phiN(s, RVec(n));
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < n; ++j) {
                k1[i][j] = Complex(z(i * n + j), z((s + i) * n + j));
                k2[i][j] = z((2 * s + i) * n + j);
                k3[i][j] = z((3 * s + i) * n + j);
            }
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < n; ++j) {
                Complex aB(0.0, 0.0);
                double aR = 0.0, aU = 0.0;
                for (int m = 0; m < s; ++m) {
                    aB += t_.A(i, m) * k1[m][j];
                    aR += t_.A(i, m) * k2[m][j];
                    aU += t_.A(i, m) * k3[m][j];
                }
                Bn[i][j] = st_.B[j] + tau_ * aB;
                rhoN[i][j] = st_.rho[j] + tau_ * aR;
                uN[i][j] = st_.u[j] + tau_ * aU;
            }
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int m = 0; m < s; ++m)
                    acc += t_.A(i, m) * 2.0 * (std::conj(Bn[m][j]) * k1[m][j]).real();
                phiN[i][j] = st_.phi[j] + tau_ * acc;
            }

        Eigen::VectorXd r(dim());
        for (int i = 0; i < s; ++i) {
            const CVec Bxx = apply_dense(D2_, Bn[i]);
            RVec f2(n), f3(n);
            for (int j = 0; j < n; ++j) {
                f2[j] = -uN[i][j] + p_.nu * rhoN[i][j] - p_.kappa * phiN[i][j];
                f3[j] = -p_.beta * rhoN[i][j] + p_.nu * uN[i][j] +
                        0.5 * p_.kappa * p_.nu * phiN[i][j];
            }
            const RVec d2f = apply_dense(D1_, f2);
            const RVec d3f = apply_dense(D1_, f3);
            for (int j = 0; j < n; ++j) {
                const double coef =
                    uN[i][j] - 0.5 * p_.nu * rhoN[i][j] + p_.q * phiN[i][j];
                const Complex rb =
                    k1[i][j] - Complex(0.0, 1.0) * (p_.omega * Bxx[j] -
                                                    p_.kappa * coef * Bn[i][j]);
                r(i * n + j) = rb.real();
                r((s + i) * n + j) = rb.imag();
                r((2 * s + i) * n + j) = k2[i][j] - d2f[j];
                r((3 * s + i) * n + j) = k3[i][j] - d3f[j];
            }
        }
        return r;
    }

private:
    Params p_;
    Tableau t_;
    double tau_;
    const FieldState& st_;
    int n_;
    Eigen::MatrixXd D1_, D2_;
};

} // namespace

StageSlopes newton_stage_solve(const Params& p, const SpectralGrid& g,
                               const Tableau& t, double tau, const FieldState& st,
                               double resTol, int maxIter) {
    const int s = t.s;
    const int n = g.n;
    StageResidual F(p, g, t, tau, st);
    const int dim = F.dim();

    Eigen::VectorXd z(dim);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < n; ++j) {
            z(i * n + j) = st.B[j].real();
            z((s + i) * n + j) = st.B[j].imag();
            z((2 * s + i) * n + j) = st.rho[j];
            z((3 * s + i) * n + j) = st.u[j];
        }

    Eigen::VectorXd r = F(z);
    double rnorm = r.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < maxIter && rnorm > resTol; ++it) {
        // Forward-difference Jacobian, step scaled by the variable magnitude.
        Eigen::MatrixXd J(dim, dim);
        for (int k = 0; k < dim; ++k) {
            const double dz = 1e-7 * std::max(1.0, std::abs(z(k)));
            Eigen::VectorXd zp = z;
            zp(k) += dz;
            J.col(k) = (F(zp) - r) / dz;
        }
        const Eigen::VectorXd dzv = J.partialPivLu().solve(-r);
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
            const Eigen::VectorXd zTrial = z + alpha * dzv;
            const Eigen::VectorXd rTrial = F(zTrial);
            const double rtNorm = rTrial.lpNorm<Eigen::Infinity>();
            if (rtNorm < rnorm) {
                z = zTrial;
                r = rTrial;
                rnorm = rtNorm;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw std::runtime_error("newton_stage_solve: line search stalled at "
                                     "residual " + std::to_string(rnorm));
    }
    if (rnorm > resTol)
        throw std::runtime_error("newton_stage_solve: residual " +
                                 std::to_string(rnorm) + " above tolerance");

    StageSlopes k;
    k.k1.assign(s, CVec(n));
    k.k2.assign(s, RVec(n));
    k.k3.assign(s, RVec(n));
    k.k4.assign(s, RVec(n));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < n; ++j) {
            k.k1[i][j] = Complex(z(i * n + j), z((s + i) * n + j));
            k.k2[i][j] = z((2 * s + i) * n + j);
            k.k3[i][j] = z((3 * s + i) * n + j);
        }
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < n; ++j) {
            Complex aB(0.0, 0.0);
            for (int m = 0; m < s; ++m) aB += t.A(i, m) * k.k1[m][j];
            const Complex bni = st.B[j] + tau * aB;
            k.k4[i][j] = 2.0 * (std::conj(bni) * k.k1[i][j]).real();
        }
    return k;
}

} // namespace zr
