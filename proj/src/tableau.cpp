#include "zr/tableau.hpp"

#include <cmath>
#include <stdexcept>

namespace zr {

Tableau gauss_tableau(int s) {
    Tableau t;
    t.name = "gauss" + std::to_string(s);
    t.s = s;
    t.order = 2 * s;
    switch (s) {
    case 1:
        t.a = {0.5};
        t.b = {1.0};
        t.c = {0.5};
        break;
    case 2: {
        const double r = std::sqrt(3.0) / 6.0;
        t.a = {0.25, 0.25 - r,
               0.25 + r, 0.25};
        t.b = {0.5, 0.5};
        t.c = {0.5 - r, 0.5 + r};
        break;
    }
    case 3: {
        const double r15 = std::sqrt(15.0);
        t.a = {5.0 / 36.0,            2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0,
               5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0,            5.0 / 36.0 - r15 / 24.0,
               5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0};
        t.b = {5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};
        t.c = {0.5 - r15 / 10.0, 0.5, 0.5 + r15 / 10.0};
        break;
    }
    default:
        throw std::invalid_argument("gauss_tableau: s must be 1, 2 or 3");
    }
    return t;
}

Tableau explicit_euler_tableau() {
    Tableau t;
    t.name = "euler-explicit";
    t.s = 1;
    t.order = 1;
    t.a = {0.0};
    t.b = {1.0};
    t.c = {0.0};
    return t;
}

Tableau implicit_euler_tableau() {
    Tableau t;
    t.name = "euler-implicit";
    t.s = 1;
    t.order = 1;
    t.a = {1.0};
    t.b = {1.0};
    t.c = {1.0};
    return t;
}

Tableau rk4_tableau() {
    Tableau t;
    t.name = "rk4";
    t.s = 4;
    t.order = 4;
    t.a = {0.0, 0.0, 0.0, 0.0,
           0.5, 0.0, 0.0, 0.0,
           0.0, 0.5, 0.0, 0.0,
           0.0, 0.0, 1.0, 0.0};
    t.b = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    t.c = {0.0, 0.5, 0.5, 1.0};
    return t;
}

double symplectic_defect(const Tableau& t) {
    double m = 0.0;
    for (int i = 0; i < t.s; ++i)
        for (int j = 0; j < t.s; ++j)
            m = std::max(m, std::abs(t.b[i] * t.A(i, j) + t.b[j] * t.A(j, i) -
                                     t.b[i] * t.b[j]));
    return m;
}

} // namespace zr
