#ifndef ZR_TABLEAU_HPP
#define ZR_TABLEAU_HPP

#include <string>
#include <vector>

namespace zr {

/// Runge-Kutta Butcher tableau, row-major A.
struct Tableau {
    std::string name;
    int s = 0;              // number of stages
    int order = 0;          // classical order
    std::vector<double> a;  // s*s, row-major
    std::vector<double> b;  // s
    std::vector<double> c;  // s

    double A(int i, int j) const { return a[static_cast<size_t>(i) * s + j]; }
    double& A(int i, int j) { return a[static_cast<size_t>(i) * s + j]; }
};

/// Gauss collocation tableau with s stages (order 2s), s in {1,2,3}, entries
/// in closed-form radicals.  Throws std::invalid_argument otherwise.
Tableau gauss_tableau(int s);

/// Non-symplectic reference tableaux used by diagnostics and tests.
Tableau explicit_euler_tableau();
Tableau implicit_euler_tableau();
Tableau rk4_tableau();

/// max_{i,j} |b_i a_ij + b_j a_ji - b_i b_j|; zero (to round-off) exactly for
/// symplectic tableaux.  Both Euler tableaux give exactly 1.
double symplectic_defect(const Tableau& t);

} // namespace zr

#endif
