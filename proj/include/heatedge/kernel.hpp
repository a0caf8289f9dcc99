// The compactly supported measurement kernel K and its tile-local
// rescalings K_{delta,alpha}(y) = delta^{-d/2} K(delta^{-1} (y - x_alpha)).
//
// K(x) = c * prod_a psi(x_a) for a one-dimensional C^2 bump psi supported
// on [-1/2, 1/2], normalized so that ||K||_{L2(R^d)} = 1. The scaled kernel
// is then supported exactly on the tile Sq(alpha) with unit L2 norm and
// ||grad K_{delta,alpha}||^2 = delta^{-2} ||grad K||^2.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatedge/grid.hpp"
#include "heatedge/mathutil.hpp"

namespace heatedge {

// One-dimensional profile with two continuous derivatives vanishing at the
// support boundary. Pluggable; bump3 is the default and only built-in.
struct KernelProfile {
    std::string name;
    double (*value)(double);
    double (*deriv1)(double);
    double (*deriv2)(double);
};

namespace profiles {

// psi(u) = (1 - 4u^2)^3 on [-1/2, 1/2]; psi, psi', psi'' all vanish at the
// boundary, so K is in H^2 with closed-form derivatives.
inline double bump3(double u) {
    const double w = 1.0 - 4.0 * u * u;
    return w > 0.0 ? w * w * w : 0.0;
}
inline double bump3_d1(double u) {
    const double w = 1.0 - 4.0 * u * u;
    return w > 0.0 ? -24.0 * u * w * w : 0.0;
}
inline double bump3_d2(double u) {
    const double w = 1.0 - 4.0 * u * u;
    return w > 0.0 ? w * (480.0 * u * u - 24.0) : 0.0;
}

}  // namespace profiles

class Kernel {
  public:
    static Kernel bump3(int d) {
        return Kernel(d, {"bump3", &profiles::bump3, &profiles::bump3_d1, &profiles::bump3_d2});
    }

    static Kernel from_profile_name(int d, const std::string& name) {
        if (name == "bump3") return bump3(d);
        throw std::invalid_argument("Kernel: unknown profile '" + name + "'");
    }

    Kernel(int d, KernelProfile profile) : d_(d), profile_(profile) {
        if (d < 2) throw std::invalid_argument("Kernel: dimension must be >= 2");
        // One-dimensional moments by deterministic adaptive quadrature;
        // these pin the normalization and the gradient norm.
        psi_sq_ = adaptive_simpson([this](double u) { return sq(profile_.value(u)); },
                                   -0.5, 0.5, 1e-13);
        dpsi_sq_ = adaptive_simpson([this](double u) { return sq(profile_.deriv1(u)); },
                                    -0.5, 0.5, 1e-12);
        norm_const_ = std::pow(psi_sq_, -0.5 * d);
        grad_sq_ = d * dpsi_sq_ / psi_sq_;  // c^2 * d * (int psi'^2) * (int psi^2)^{d-1}
    }

    int dim() const { return d_; }
    const std::string& profile_name() const { return profile_.name; }

    // ||grad K||^2_{L2(R^d)}; enters the Fisher scaling and the CLT variance.
    double grad_norm_squared() const { return grad_sq_; }
    double norm_constant() const { return norm_const_; }
    double psi_sq_integral() const { return psi_sq_; }
    double dpsi_sq_integral() const { return dpsi_sq_; }

    double psi(double u) const { return profile_.value(u); }
    double psi_d1(double u) const { return profile_.deriv1(u); }
    double psi_d2(double u) const { return profile_.deriv2(u); }

    // K(x); identically zero outside [-1/2, 1/2]^d.
    double eval(std::span<const double> x) const {
        double v = norm_const_;
        for (int a = 0; a < d_; ++a) {
            v *= profile_.value(x[static_cast<std::size_t>(a)]);
            if (v == 0.0) return 0.0;
        }
        return v;
    }

    // K_{delta,alpha}(y) for the tile alpha of `grid`.
    double eval_scaled(const TileGrid& grid, std::int64_t alpha, std::span<const double> y) const {
        check_grid(grid);
        std::vector<double> u(static_cast<std::size_t>(d_));
        to_local(grid, alpha, y, u);
        return std::pow(grid.delta(), -0.5 * d_) * eval(u);
    }

    void gradient_scaled(const TileGrid& grid, std::int64_t alpha, std::span<const double> y,
                         std::span<double> out) const {
        check_grid(grid);
        std::vector<double> u(static_cast<std::size_t>(d_));
        to_local(grid, alpha, y, u);
        const double pref = std::pow(grid.delta(), -0.5 * d_ - 1.0) * norm_const_;
        for (int a = 0; a < d_; ++a) {
            double v = pref;
            for (int b = 0; b < d_; ++b) {
                const double ub = u[static_cast<std::size_t>(b)];
                v *= (b == a) ? profile_.deriv1(ub) : profile_.value(ub);
            }
            out[static_cast<std::size_t>(a)] = v;
        }
    }

    // (Laplace K_{delta,alpha})(y), via the product rule.
    double laplacian_scaled(const TileGrid& grid, std::int64_t alpha,
                            std::span<const double> y) const {
        check_grid(grid);
        std::vector<double> u(static_cast<std::size_t>(d_));
        to_local(grid, alpha, y, u);
        const double pref = std::pow(grid.delta(), -0.5 * d_ - 2.0) * norm_const_;
        double total = 0.0;
        for (int a = 0; a < d_; ++a) {
            double v = 1.0;
            for (int b = 0; b < d_; ++b) {
                const double ub = u[static_cast<std::size_t>(b)];
                v *= (b == a) ? profile_.deriv2(ub) : profile_.value(ub);
            }
            total += v;
        }
        return pref * total;
    }

  private:
    static double sq(double v) { return v * v; }

    void check_grid(const TileGrid& grid) const {
        if (grid.d != d_) throw std::invalid_argument("Kernel: grid dimension mismatch");
    }

    void to_local(const TileGrid& grid, std::int64_t alpha, std::span<const double> y,
                  std::span<double> u) const {
        const auto c = grid.center(alpha);
        const double inv = static_cast<double>(grid.n);
        for (int a = 0; a < d_; ++a)
            u[static_cast<std::size_t>(a)] =
                (y[static_cast<std::size_t>(a)] - c[static_cast<std::size_t>(a)]) * inv;
    }

    int d_;
    KernelProfile profile_;
    double psi_sq_ = 0.0;
    double dpsi_sq_ = 0.0;
    double norm_const_ = 0.0;
    double grad_sq_ = 0.0;
};

}  // namespace heatedge
