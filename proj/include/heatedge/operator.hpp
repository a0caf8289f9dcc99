// Spatial discretization of -div(theta grad) on (0,1)^d with Dirichlet
// boundary, and its spectral decomposition.
//
// Nodes sit at x = (i+1)h per axis, i = 0..M-1, h = 1/(M+1), flattened
// row-major with the last axis fastest (same axis order as TileGrid). The
// stencil is the standard 2d+1-point divergence form with harmonic
// averaging of theta across the faces between nodes, so for constant theta
// the matrix is exactly theta times the discrete Dirichlet Laplacian and
// the spectrum has the classical closed form.
//
// Eigenvectors are normalized in the h-weighted inner product
// <u,v>_h = h^d sum_i u_i v_i; projecting space-time white noise on that
// basis yields i.i.d. scalar Brownian drivers per mode.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "heatedge/domain.hpp"
#include "heatedge/grid.hpp"

#if defined(HEATEDGE_HAVE_LAPACKE)
extern "C" int LAPACKE_dsyevd(int matrix_layout, char jobz, char uplo, int n, double* a,
                              int lda, double* w);
#endif

namespace heatedge {

struct DiffusivitySpec {
    double theta_minus = 1.0;
    double theta_plus = 1.0;
    GroundTruthDomain domain;

    DiffusivitySpec(double tm, double tp, GroundTruthDomain dom)
        : theta_minus(tm), theta_plus(tp), domain(std::move(dom)) {
        if (!(theta_minus > 0.0) || !(theta_plus > 0.0))
            throw std::invalid_argument("DiffusivitySpec: diffusivities must be positive");
    }

    double jump_height() const { return theta_plus - theta_minus; }
    bool constant() const { return theta_minus == theta_plus; }

    double theta_at(std::span<const double> x) const {
        return domain.contains(x) ? theta_plus : theta_minus;
    }
};

class DiscreteOperator {
  public:
    DiscreteOperator(const DiffusivitySpec& spec, int M, const TileGrid& grid)
        : d_(grid.d), M_(M), h_(1.0 / (M + 1)), grid_(grid),
          theta_minus_(spec.theta_minus), theta_plus_(spec.theta_plus),
          constant_(spec.constant()) {
        if (M < 1) throw std::invalid_argument("DiscreteOperator: M must be >= 1");
        if (M % grid.n != 0)
            throw std::invalid_argument(
                "DiscreteOperator: M must be a multiple of n to keep tile alignment");
        if (spec.domain.dim() != d_)
            throw std::invalid_argument("DiscreteOperator: domain dimension mismatch");

        const std::int64_t nodes = node_count();
        if (nodes > (std::int64_t{1} << 26))
            throw std::invalid_argument("DiscreteOperator: node count too large");
        theta_nodes_.resize(static_cast<std::size_t>(nodes));
        std::vector<int> idx(static_cast<std::size_t>(d_));
        std::vector<double> x(static_cast<std::size_t>(d_));
        for (std::int64_t f = 0; f < nodes; ++f) {
            node_multi_index(f, idx);
            for (int a = 0; a < d_; ++a)
                x[static_cast<std::size_t>(a)] = (idx[static_cast<std::size_t>(a)] + 1) * h_;
            theta_nodes_[static_cast<std::size_t>(f)] = spec.theta_at(x);
        }
        // theta at boundary points enters only through the wall faces.
        boundary_theta_ = [spec](const std::vector<double>& bx) { return spec.theta_at(bx); };
    }

    int dim() const { return d_; }
    int fine_m() const { return M_; }
    double mesh_width() const { return h_; }
    const TileGrid& tile_grid() const { return grid_; }
    bool constant_theta() const { return constant_; }
    double theta_minus() const { return theta_minus_; }
    double theta_plus() const { return theta_plus_; }
    const std::vector<double>& theta_nodes() const { return theta_nodes_; }

    std::int64_t node_count() const {
        std::int64_t c = 1;
        for (int a = 0; a < d_; ++a) c *= M_;
        return c;
    }

    void node_multi_index(std::int64_t flat, std::span<int> out) const {
        for (int a = d_ - 1; a >= 0; --a) {
            out[static_cast<std::size_t>(a)] = static_cast<int>(flat % M_);
            flat /= M_;
        }
    }

    std::int64_t node_flat_index(std::span<const int> idx) const {
        std::int64_t f = 0;
        for (int a = 0; a < d_; ++a) f = f * M_ + idx[static_cast<std::size_t>(a)];
        return f;
    }

    double node_coordinate(int i) const { return (i + 1) * h_; }

    // Harmonic face coefficient between theta values on the two sides.
    static double face_coefficient(double ta, double tb) { return 2.0 * ta * tb / (ta + tb); }

    // Dense symmetric stiffness matrix (node_count x node_count).
    Eigen::MatrixXd dense_matrix() const {
        const std::int64_t n = node_count();
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        const double inv_h2 = 1.0 / (h_ * h_);
        std::vector<int> idx(static_cast<std::size_t>(d_));
        std::vector<double> bx(static_cast<std::size_t>(d_));
        for (std::int64_t f = 0; f < n; ++f) {
            node_multi_index(f, idx);
            double diag = 0.0;
            for (int a = 0; a < d_; ++a) {
                const int ia = idx[static_cast<std::size_t>(a)];
                std::int64_t stride = 1;
                for (int b = a + 1; b < d_; ++b) stride *= M_;
                for (int dir : {-1, +1}) {
                    const int ja = ia + dir;
                    double coef;
                    if (ja < 0 || ja >= M_) {
                        // Wall face; theta at the boundary point.
                        for (int b = 0; b < d_; ++b)
                            bx[static_cast<std::size_t>(b)] =
                                (idx[static_cast<std::size_t>(b)] + 1) * h_;
                        bx[static_cast<std::size_t>(a)] = (ja < 0) ? 0.0 : 1.0;
                        coef = face_coefficient(theta_nodes_[static_cast<std::size_t>(f)],
                                                boundary_theta_(bx));
                    } else {
                        const std::int64_t g = f + dir * stride;
                        coef = face_coefficient(theta_nodes_[static_cast<std::size_t>(f)],
                                                theta_nodes_[static_cast<std::size_t>(g)]);
                        A(f, g) = -coef * inv_h2;
                    }
                    diag += coef * inv_h2;
                }
            }
            A(f, f) = diag;
        }
        return A;
    }

  private:
    int d_, M_;
    double h_;
    TileGrid grid_;
    double theta_minus_, theta_plus_;
    bool constant_;
    std::vector<double> theta_nodes_;
    std::function<double(const std::vector<double>&)> boundary_theta_;
};

// Eigenvalues of the 1-d discrete Dirichlet Laplacian (theta = 1),
// mu_k = 4 (M+1)^2 sin^2((k+1) pi / (2(M+1))), k = 0..M-1.
inline double laplacian_1d_eigenvalue(int M, int k) {
    const double s = std::sin((k + 1) * std::numbers::pi / (2.0 * (M + 1)));
    return 4.0 * (M + 1) * (M + 1) * s * s;
}

// Spectral data of a DiscreteOperator. For constant diffusivity the basis
// is the closed-form tensor sine basis; otherwise a dense symmetric
// eigensolve (dsyevd when LAPACKE is linked, Eigen otherwise).
class OperatorSpectrum {
  public:
    OperatorSpectrum(const DiscreteOperator& op, std::int64_t mode_cap = 0)
        : d_(op.dim()), M_(op.fine_m()), h_(op.mesh_width()), grid_(op.tile_grid()),
          separable_(op.constant_theta()) {
        if (separable_)
            build_separable(op);
        else
            build_dense(op);
        if (mode_cap > 0) truncate(mode_cap);
    }

    int dim() const { return d_; }
    int fine_m() const { return M_; }
    double mesh_width() const { return h_; }
    const TileGrid& tile_grid() const { return grid_; }
    bool separable() const { return separable_; }
    std::int64_t mode_count() const { return static_cast<std::int64_t>(lambda_.size()); }
    const std::vector<double>& eigenvalues() const { return lambda_; }

    // Dense path only: h-orthonormal eigenvector matrix (nodes x modes).
    const Eigen::MatrixXd& eigenvectors() const {
        if (separable_)
            throw std::logic_error("OperatorSpectrum: separable basis has no stored vectors");
        return evecs_;
    }

    bool has_eigenvectors() const { return !separable_ && evecs_.size() > 0; }

    // Per-axis 1-d mode indices of mode k (separable path only).
    std::span<const int> mode_axes(std::int64_t k) const {
        if (!separable_) throw std::logic_error("OperatorSpectrum: not separable");
        return {mode_axes_.data() + k * d_, static_cast<std::size_t>(d_)};
    }

    double theta_constant() const { return theta_const_; }

    // v_k[i] = sqrt(2) sin((k+1) pi (i+1) h): h-orthonormal 1-d eigenbasis.
    double sine_basis(int k, int i) const {
        return std::numbers::sqrt2 * std::sin((k + 1) * std::numbers::pi * (i + 1) * h_);
    }

    // Value of eigenvector k at a node (either path); test/debug helper.
    double eigenvector_entry(std::int64_t k, std::int64_t node) const {
        if (!separable_) return evecs_(node, k);
        double v = 1.0;
        std::int64_t rest = node;
        for (int a = d_ - 1; a >= 0; --a) {
            const int ia = static_cast<int>(rest % M_);
            rest /= M_;
            v *= sine_basis(mode_axes_[static_cast<std::size_t>(k * d_ + a)], ia);
        }
        return v;
    }

    // Keep only the `count` smallest eigenvalues.
    void truncate(std::int64_t count) {
        if (count < 1 || count > mode_count())
            throw std::invalid_argument("OperatorSpectrum: truncation count out of range");
        lambda_.resize(static_cast<std::size_t>(count));
        if (separable_)
            mode_axes_.resize(static_cast<std::size_t>(count * d_));
        else if (evecs_.size() > 0)
            evecs_ = evecs_.leftCols(count).eval();
    }

    // Release the dense eigenvector storage once measurement vectors exist.
    void drop_eigenvectors() { evecs_.resize(0, 0); }

  private:
    void build_separable(const DiscreteOperator& op) {
        theta_const_ = op.theta_nodes().front();
        const std::int64_t modes = op.node_count();
        std::vector<double> mu(static_cast<std::size_t>(M_));
        for (int k = 0; k < M_; ++k) mu[static_cast<std::size_t>(k)] = laplacian_1d_eigenvalue(M_, k);

        std::vector<std::int64_t> order(static_cast<std::size_t>(modes));
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> lam(static_cast<std::size_t>(modes));
        std::vector<int> idx(static_cast<std::size_t>(d_));
        for (std::int64_t f = 0; f < modes; ++f) {
            std::int64_t rest = f;
            double s = 0.0;
            for (int a = d_ - 1; a >= 0; --a) {
                s += mu[static_cast<std::size_t>(rest % M_)];
                rest /= M_;
            }
            lam[static_cast<std::size_t>(f)] = theta_const_ * s;
        }
        // Ascending eigenvalues, ties broken by the flat axis index so the
        // ordering (and hence the RNG mode addressing) is reproducible.
        std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            if (lam[static_cast<std::size_t>(a)] != lam[static_cast<std::size_t>(b)])
                return lam[static_cast<std::size_t>(a)] < lam[static_cast<std::size_t>(b)];
            return a < b;
        });
        lambda_.resize(static_cast<std::size_t>(modes));
        mode_axes_.resize(static_cast<std::size_t>(modes * d_));
        for (std::int64_t r = 0; r < modes; ++r) {
            const std::int64_t f = order[static_cast<std::size_t>(r)];
            lambda_[static_cast<std::size_t>(r)] = lam[static_cast<std::size_t>(f)];
            std::int64_t rest = f;
            for (int a = d_ - 1; a >= 0; --a) {
                mode_axes_[static_cast<std::size_t>(r * d_ + a)] = static_cast<int>(rest % M_);
                rest /= M_;
            }
        }
    }

    void build_dense(const DiscreteOperator& op) {
        const std::int64_t n = op.node_count();
        Eigen::MatrixXd A = op.dense_matrix();
        lambda_.assign(static_cast<std::size_t>(n), 0.0);
#if defined(HEATEDGE_HAVE_LAPACKE)
        {
            constexpr int kColMajor = 102;  // LAPACK_COL_MAJOR
            const int info = LAPACKE_dsyevd(kColMajor, 'V', 'L', static_cast<int>(n), A.data(),
                                            static_cast<int>(n), lambda_.data());
            if (info != 0)
                throw std::runtime_error("OperatorSpectrum: dsyevd failed, info=" +
                                         std::to_string(info));
            evecs_ = std::move(A);
        }
#else
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
            if (solver.info() != Eigen::Success)
                throw std::runtime_error("OperatorSpectrum: eigensolve failed");
            for (std::int64_t k = 0; k < n; ++k)
                lambda_[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
            evecs_ = solver.eigenvectors();
        }
#endif
        if (lambda_.front() <= 0.0)
            throw std::runtime_error("OperatorSpectrum: operator is not positive definite");
        // Rescale from l2- to h-orthonormality.
        evecs_ *= std::pow(h_, -0.5 * d_);
    }

    int d_, M_;
    double h_;
    TileGrid grid_;
    bool separable_;
    double theta_const_ = 0.0;
    std::vector<double> lambda_;
    std::vector<int> mode_axes_;
    Eigen::MatrixXd evecs_;
};

}  // namespace heatedge
