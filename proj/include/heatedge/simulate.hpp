// Forward simulation of dX = Delta_theta X dt + dW (Dirichlet boundary,
// X(0) = 0) through exact Ornstein-Uhlenbeck transitions per eigenmode, and
// extraction of the local-measurement Ito statistics
//   U_alpha = int X^Lap dX   (left-endpoint Ito sum),
//   I_alpha = int (X^Lap)^2 dt.
//
// The streaming path (simulate_local_stats) never materializes mode
// trajectories; it advances modes in blocks of kSimBlock steps and reduces
// them against the per-tile measurement vectors with one GEMM per block.
// measure() on a stored field uses the same block size and accumulation
// order, so both paths produce bit-identical statistics.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "heatedge/geometry.hpp"
#include "heatedge/grid.hpp"
#include "heatedge/kernel.hpp"
#include "heatedge/mathutil.hpp"
#include "heatedge/operator.hpp"
#include "heatedge/rng.hpp"

namespace heatedge {

inline constexpr int kSimBlock = 64;

// Per-tile sufficient statistics of one replicate.
struct LocalStats {
    TileGrid grid;
    int replicate = 0;
    std::vector<double> u;       // U_alpha
    std::vector<double> fisher;  // I_alpha (observed Fisher information)
};

// How the Laplacian-tested observable X^Lap is discretized. `Discrete`
// applies the operator's own second-difference stencil to the kernel node
// values, so on tiles whose stencil sees constant theta the drift
// regression U/I is exactly centered on theta (no spatial bias).
// `Analytic` samples Lap K_{delta,alpha} pointwise; it converges to the
// same observable at rate (h/delta)^2 but leaves a drift bias of about
// 3.7 (n/M)^2 that dominates the CLT-scale statistics.
enum class LaplacianConvention { Discrete, Analytic };

// <e_k, K_{delta,alpha}>_h and <e_k, Lap K_{delta,alpha}>_h for every mode
// and tile; all measurement functionals the simulation needs.
struct MeasurementVectors {
    TileGrid grid;
    Eigen::MatrixXd w;      // modes x N
    Eigen::MatrixXd w_lap;  // modes x N
};

inline MeasurementVectors measurement_vectors(
    const OperatorSpectrum& spectrum, const Kernel& kernel, const TileGrid& grid,
    LaplacianConvention convention = LaplacianConvention::Discrete) {
    if (!(spectrum.tile_grid() == grid))
        throw std::invalid_argument("measurement_vectors: spectrum/grid misalignment");
    if (kernel.dim() != grid.d)
        throw std::invalid_argument("measurement_vectors: kernel dimension mismatch");

    const int d = grid.d, M = spectrum.fine_m(), n = grid.n;
    const double h = spectrum.mesh_width();
    const double del = grid.delta();
    const std::int64_t modes = spectrum.mode_count();
    const std::int64_t n_tiles = grid.tile_count();

    MeasurementVectors out{grid, Eigen::MatrixXd(modes, n_tiles), Eigen::MatrixXd(modes, n_tiles)};

    const double scale = std::pow(del, -0.5 * d) * kernel.norm_constant();

    // Per-axis kernel samples: psi(((i+1)h - c_p)/del), i = -1..M covers the
    // walls (where psi vanishes). The Laplacian factor is either the
    // analytic psi''/del^2 or the Dirichlet second difference of the samples.
    auto axis_psi = [&](int p, int i) {
        const double u = ((i + 1) * h - del * (p + 0.5)) / del;
        return kernel.psi(u);
    };
    auto axis_lap = [&](int p, int i) {
        if (convention == LaplacianConvention::Analytic) {
            const double u = ((i + 1) * h - del * (p + 0.5)) / del;
            return kernel.psi_d2(u) / (del * del);
        }
        return (axis_psi(p, i - 1) - 2.0 * axis_psi(p, i) + axis_psi(p, i + 1)) / (h * h);
    };

    if (spectrum.separable()) {
        // Per-axis tables S[p][k] = h sum_i v_k[i] g(x_i) for g = psi and the
        // Laplacian factor; every axis shares them.
        Eigen::MatrixXd s_psi = Eigen::MatrixXd::Zero(n, M);
        Eigen::MatrixXd s_lap = Eigen::MatrixXd::Zero(n, M);
        for (int p = 0; p < n; ++p) {
            for (int k = 0; k < M; ++k) {
                double acc = 0.0, acc2 = 0.0;
                for (int i = 0; i < M; ++i) {
                    const double g = axis_psi(p, i);
                    const double l = axis_lap(p, i);
                    if (g == 0.0 && l == 0.0) continue;
                    const double v = spectrum.sine_basis(k, i);
                    acc += v * g;
                    acc2 += v * l;
                }
                s_psi(p, k) = h * acc;
                s_lap(p, k) = h * acc2;
            }
        }
        std::vector<int> tile_idx(static_cast<std::size_t>(d));
        for (std::int64_t t = 0; t < n_tiles; ++t) {
            grid.multi_index(t, tile_idx);
            for (std::int64_t k = 0; k < modes; ++k) {
                const auto axes = spectrum.mode_axes(k);
                double prod = 1.0;
                for (int a = 0; a < d; ++a)
                    prod *= s_psi(tile_idx[static_cast<std::size_t>(a)],
                                  axes[static_cast<std::size_t>(a)]);
                double lap = 0.0;
                for (int a = 0; a < d; ++a) {
                    double term = s_lap(tile_idx[static_cast<std::size_t>(a)],
                                        axes[static_cast<std::size_t>(a)]);
                    for (int b = 0; b < d; ++b)
                        if (b != a)
                            term *= s_psi(tile_idx[static_cast<std::size_t>(b)],
                                          axes[static_cast<std::size_t>(b)]);
                    lap += term;
                }
                out.w(k, t) = scale * prod;
                out.w_lap(k, t) = scale * lap;
            }
        }
        return out;
    }

    // Dense path: assemble node values of K and Lap K per tile (the discrete
    // Laplacian spills one node ring beyond the tile), then one matrix
    // product against the eigenvector block.
    const std::int64_t nodes = spectrum.eigenvectors().rows();
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(nodes, 2 * n_tiles);
    const int per_tile = M / n;
    std::vector<int> tile_idx(static_cast<std::size_t>(d));
    std::vector<int> node_idx(static_cast<std::size_t>(d));
    for (std::int64_t t = 0; t < n_tiles; ++t) {
        grid.multi_index(t, tile_idx);
        std::vector<int> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) {
            lo[static_cast<std::size_t>(a)] =
                std::max(0, tile_idx[static_cast<std::size_t>(a)] * per_tile - 2);
            hi[static_cast<std::size_t>(a)] =
                std::min(M - 1, (tile_idx[static_cast<std::size_t>(a)] + 1) * per_tile + 1);
        }
        node_idx = lo;
        for (;;) {
            const std::int64_t f = [&] {
                std::int64_t acc = 0;
                for (int a = 0; a < d; ++a) acc = acc * M + node_idx[static_cast<std::size_t>(a)];
                return acc;
            }();
            double prod = 1.0;
            for (int a = 0; a < d; ++a)
                prod *= axis_psi(tile_idx[static_cast<std::size_t>(a)],
                                 node_idx[static_cast<std::size_t>(a)]);
            double lap = 0.0;
            for (int a = 0; a < d; ++a) {
                double term = axis_lap(tile_idx[static_cast<std::size_t>(a)],
                                       node_idx[static_cast<std::size_t>(a)]);
                for (int b = 0; b < d; ++b)
                    if (b != a)
                        term *= axis_psi(tile_idx[static_cast<std::size_t>(b)],
                                         node_idx[static_cast<std::size_t>(b)]);
                lap += term;
            }
            if (prod != 0.0) values(f, t) = scale * prod;
            if (lap != 0.0) values(f, n_tiles + t) = scale * lap;
            int a = d - 1;
            for (; a >= 0; --a) {
                if (++node_idx[static_cast<std::size_t>(a)] <= hi[static_cast<std::size_t>(a)]) break;
                node_idx[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)];
            }
            if (a < 0) break;
        }
    }
    const double hd = std::pow(h, d);
    Eigen::MatrixXd proj = spectrum.eigenvectors().transpose() * values;
    out.w = hd * proj.leftCols(n_tiles);
    out.w_lap = hd * proj.rightCols(n_tiles);
    return out;
}

struct SimConfig {
    double horizon = 1.0;  // T
    int steps = 1000;      // m; uniform grid t_i = i T / m
    std::uint64_t seed = 0;
    std::uint32_t replicate = 0;
};

namespace detail {

struct OuCoefficients {
    std::vector<double> decay;  // exp(-lambda dt)
    std::vector<double> sd;     // sqrt((1 - exp(-2 lambda dt)) / (2 lambda))
};

inline OuCoefficients ou_coefficients(const std::vector<double>& lambda, double dt) {
    OuCoefficients c;
    c.decay.resize(lambda.size());
    c.sd.resize(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        c.decay[k] = std::exp(-lambda[k] * dt);
        c.sd[k] = std::sqrt(-std::expm1(-2.0 * lambda[k] * dt) / (2.0 * lambda[k]));
    }
    return c;
}

// Advances the mode vector by one exact OU transition.
inline void ou_step(const OuCoefficients& c, std::uint64_t seed, std::uint32_t replicate,
                    std::uint32_t step, std::vector<double>& modes, std::vector<double>& scratch) {
    normal_fill_pairwise(seed, replicate, step, scratch.data(), modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k)
        modes[k] = c.decay[k] * modes[k] + c.sd[k] * scratch[k];
}

}  // namespace detail

// Mode-coefficient trajectories of one replicate; only sensible for small
// configurations (tests, field dumps). The experiment paths stream instead.
struct SimulatedField {
    const OperatorSpectrum* spectrum = nullptr;
    SimConfig config;
    std::vector<double> times;
    Eigen::MatrixXd modes;  // mode_count x (steps+1)
};

inline SimulatedField simulate(const OperatorSpectrum& spectrum, const SimConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("simulate: need at least one step");
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
    const std::int64_t modes = spectrum.mode_count();
    if (modes * (cfg.steps + 1) > (std::int64_t{1} << 27))
        throw std::invalid_argument(
            "simulate: trajectory storage too large; use simulate_local_stats");

    SimulatedField field{&spectrum, cfg, {}, Eigen::MatrixXd::Zero(modes, cfg.steps + 1)};
    field.times.resize(static_cast<std::size_t>(cfg.steps) + 1);
    const double dt = cfg.horizon / cfg.steps;
    for (int i = 0; i <= cfg.steps; ++i) field.times[static_cast<std::size_t>(i)] = i * dt;

    const auto coef = detail::ou_coefficients(spectrum.eigenvalues(), dt);
    std::vector<double> x(static_cast<std::size_t>(modes), 0.0);
    std::vector<double> z(static_cast<std::size_t>(modes));
    for (int i = 1; i <= cfg.steps; ++i) {
        detail::ou_step(coef, cfg.seed, cfg.replicate, static_cast<std::uint32_t>(i), x, z);
        for (std::int64_t k = 0; k < modes; ++k)
            field.modes(k, i) = x[static_cast<std::size_t>(k)];
    }
    return field;
}

// Per-tile measurement trajectories X_{delta,alpha}(t_i), X^Lap_{delta,alpha}(t_i).
struct TileTrajectories {
    TileGrid grid;
    std::vector<double> times;
    Eigen::MatrixXd x;      // N x (steps+1)
    Eigen::MatrixXd x_lap;  // N x (steps+1)
};

inline TileTrajectories measure(const SimulatedField& field, const MeasurementVectors& vectors) {
    const std::int64_t n_tiles = vectors.grid.tile_count();
    const std::int64_t modes = field.modes.rows();
    const std::int64_t steps = field.modes.cols() - 1;
    TileTrajectories out{vectors.grid, field.times, Eigen::MatrixXd(n_tiles, steps + 1),
                         Eigen::MatrixXd(n_tiles, steps + 1)};
    // X(0) = 0; every later column is produced by exactly one GEMM of the
    // same block shape as the streaming path, so both paths agree bit for
    // bit.
    out.x.col(0).setZero();
    out.x_lap.col(0).setZero();
    Eigen::MatrixXd mode_block(modes, kSimBlock);
    std::int64_t i = 0;
    while (i < steps) {
        const std::int64_t nc = std::min<std::int64_t>(kSimBlock, steps - i);
        mode_block.leftCols(nc) = field.modes.middleCols(i + 1, nc);
        out.x.middleCols(i + 1, nc).noalias() =
            vectors.w.transpose() * mode_block.leftCols(nc);
        out.x_lap.middleCols(i + 1, nc).noalias() =
            vectors.w_lap.transpose() * mode_block.leftCols(nc);
        i += nc;
    }
    return out;
}

// Left-endpoint Ito sums per tile.
inline LocalStats ito_stats(const TileTrajectories& traj, int replicate = 0) {
    const std::int64_t n_tiles = traj.grid.tile_count();
    const std::int64_t steps = traj.x.cols() - 1;
    if (steps < 1) throw std::invalid_argument("ito_stats: need at least two time points");
    for (std::int64_t i = 0; i < steps; ++i)
        if (!(traj.times[static_cast<std::size_t>(i + 1)] > traj.times[static_cast<std::size_t>(i)]))
            throw std::invalid_argument("ito_stats: time grid must be strictly increasing");

    LocalStats stats{traj.grid, replicate,
                     std::vector<double>(static_cast<std::size_t>(n_tiles), 0.0),
                     std::vector<double>(static_cast<std::size_t>(n_tiles), 0.0)};
    for (std::int64_t t = 0; t < n_tiles; ++t) {
        double u = 0.0, fisher = 0.0;
        for (std::int64_t i = 0; i < steps; ++i) {
            const double dt = traj.times[static_cast<std::size_t>(i + 1)] -
                              traj.times[static_cast<std::size_t>(i)];
            const double xl = traj.x_lap(t, i);
            u += xl * (traj.x(t, i + 1) - traj.x(t, i));
            fisher += xl * xl * dt;
        }
        stats.u[static_cast<std::size_t>(t)] = u;
        stats.fisher[static_cast<std::size_t>(t)] = fisher;
    }
    return stats;
}

// Streaming fused simulate+measure+accumulate; bit-identical to
// ito_stats(measure(simulate(...))) while holding only one block of
// measurement columns at a time.
inline LocalStats simulate_local_stats(const OperatorSpectrum& spectrum,
                                       const MeasurementVectors& vectors, const SimConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("simulate_local_stats: need steps >= 1");
    const std::int64_t modes = spectrum.mode_count();
    const std::int64_t n_tiles = vectors.grid.tile_count();
    const double dt = cfg.horizon / cfg.steps;
    const auto coef = detail::ou_coefficients(spectrum.eigenvalues(), dt);

    LocalStats stats{vectors.grid, static_cast<int>(cfg.replicate),
                     std::vector<double>(static_cast<std::size_t>(n_tiles), 0.0),
                     std::vector<double>(static_cast<std::size_t>(n_tiles), 0.0)};

    Eigen::MatrixXd mode_block(modes, kSimBlock);
    Eigen::MatrixXd x_block(n_tiles, kSimBlock + 1);
    Eigen::MatrixXd xlap_block(n_tiles, kSimBlock + 1);
    std::vector<double> x(static_cast<std::size_t>(modes), 0.0);
    std::vector<double> z(static_cast<std::size_t>(modes));

    // Column 0 of each block carries the measurement at the block's first
    // time point; it is never recomputed, matching measure()'s write-once
    // trajectory.
    x_block.col(0).setZero();
    xlap_block.col(0).setZero();
    std::int64_t i = 0;
    while (i < cfg.steps) {
        const std::int64_t nc = std::min<std::int64_t>(kSimBlock, cfg.steps - i);
        for (std::int64_t j = 0; j < nc; ++j) {
            detail::ou_step(coef, cfg.seed, cfg.replicate, static_cast<std::uint32_t>(i + j + 1), x,
                            z);
            for (std::int64_t k = 0; k < modes; ++k) mode_block(k, j) = x[static_cast<std::size_t>(k)];
        }
        x_block.middleCols(1, nc).noalias() = vectors.w.transpose() * mode_block.leftCols(nc);
        xlap_block.middleCols(1, nc).noalias() =
            vectors.w_lap.transpose() * mode_block.leftCols(nc);
        for (std::int64_t t = 0; t < n_tiles; ++t) {
            double u = stats.u[static_cast<std::size_t>(t)];
            double fisher = stats.fisher[static_cast<std::size_t>(t)];
            for (std::int64_t j = 0; j < nc; ++j) {
                const double xl = xlap_block(t, j);
                u += xl * (x_block(t, j + 1) - x_block(t, j));
                fisher += xl * xl * dt;
            }
            stats.u[static_cast<std::size_t>(t)] = u;
            stats.fisher[static_cast<std::size_t>(t)] = fisher;
        }
        x_block.col(0) = x_block.col(nc);
        xlap_block.col(0) = xlap_block.col(nc);
        i += nc;
    }
    return stats;
}

// Closed-form expectations of the discrete-model statistics. Used by the
// deterministic Fisher diagnostics and for calibrating discretization bias
// without Monte Carlo.
struct ExpectedStats {
    std::vector<double> u;       // E[U_alpha]
    std::vector<double> fisher;  // E[I_alpha]
};

inline ExpectedStats expected_local_stats(const OperatorSpectrum& spectrum,
                                          const MeasurementVectors& vectors, double horizon,
                                          int steps) {
    const std::int64_t modes = spectrum.mode_count();
    const std::int64_t n_tiles = vectors.grid.tile_count();
    const double dt = horizon / steps;
    ExpectedStats out{std::vector<double>(static_cast<std::size_t>(n_tiles), 0.0),
                      std::vector<double>(static_cast<std::size_t>(n_tiles), 0.0)};
    for (std::int64_t k = 0; k < modes; ++k) {
        const double lam = spectrum.eigenvalues()[static_cast<std::size_t>(k)];
        const double q = std::exp(-2.0 * lam * dt);
        // sum_{i=0}^{m-1} Var x(t_i) = (m - (1-q^m)/(1-q)) / (2 lambda)
        const double geo = (1.0 - std::pow(q, steps)) / (1.0 - q);
        const double var_sum = (steps - geo) / (2.0 * lam);
        const double drift = std::expm1(-lam * dt);  // e^{-lam dt} - 1
        for (std::int64_t t = 0; t < n_tiles; ++t) {
            const double wl = vectors.w_lap(k, t);
            out.fisher[static_cast<std::size_t>(t)] += wl * wl * var_sum * dt;
            out.u[static_cast<std::size_t>(t)] += vectors.w(k, t) * wl * drift * var_sum;
        }
    }
    return out;
}

// Martingale-part diagnostics against a known truth (Proposition-level
// validity check of the semimartingale dynamics).
struct SemimartingaleDiagnostics {
    std::vector<std::int64_t> off_boundary;  // tiles entering the check
    Eigen::MatrixXd standardized;            // replicates x off_boundary tiles: M/sqrt(I)
    std::vector<double> tile_mean;
    std::vector<double> tile_se;
    std::vector<double> tile_ks;
    double pooled_ks = 0.0;
    std::int64_t pooled_count = 0;
    Eigen::MatrixXd correlation;  // off-diagonal: cross-tile correlations
    double max_offdiag_correlation = 0.0;
    double offdiag_fraction_within(double bound) const {
        const std::int64_t n = correlation.rows();
        if (n < 2) return 1.0;
        std::int64_t ok = 0, total = 0;
        for (std::int64_t a = 0; a < n; ++a)
            for (std::int64_t b = a + 1; b < n; ++b, ++total)
                if (std::abs(correlation(a, b)) <= bound) ++ok;
        return static_cast<double>(ok) / static_cast<double>(total);
    }
};

inline SemimartingaleDiagnostics validate_semimartingale(std::span<const LocalStats> replicates,
                                                         const DiffusivitySpec& truth,
                                                         const TileGrid& grid) {
    if (replicates.empty())
        throw std::invalid_argument("validate_semimartingale: no replicates");
    const auto tiling = minimal_tiling(truth.domain, grid);
    const auto boundary = boundary_tiles(truth.domain, grid);

    SemimartingaleDiagnostics diag;
    for (std::int64_t t = 0; t < grid.tile_count(); ++t)
        if (std::find(boundary.begin(), boundary.end(), t) == boundary.end())
            diag.off_boundary.push_back(t);

    const std::int64_t r_count = static_cast<std::int64_t>(replicates.size());
    const std::int64_t t_count = static_cast<std::int64_t>(diag.off_boundary.size());
    diag.standardized.resize(r_count, t_count);
    for (std::int64_t r = 0; r < r_count; ++r) {
        const auto& stats = replicates[static_cast<std::size_t>(r)];
        for (std::int64_t c = 0; c < t_count; ++c) {
            const std::int64_t t = diag.off_boundary[static_cast<std::size_t>(c)];
            const double theta0 = tiling.test(t) ? truth.theta_plus : truth.theta_minus;
            const double m = stats.u[static_cast<std::size_t>(t)] -
                             theta0 * stats.fisher[static_cast<std::size_t>(t)];
            diag.standardized(r, c) = m / std::sqrt(stats.fisher[static_cast<std::size_t>(t)]);
        }
    }

    diag.tile_mean.resize(static_cast<std::size_t>(t_count));
    diag.tile_se.resize(static_cast<std::size_t>(t_count));
    diag.tile_ks.resize(static_cast<std::size_t>(t_count));
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(r_count * t_count));
    for (std::int64_t c = 0; c < t_count; ++c) {
        std::vector<double> col(static_cast<std::size_t>(r_count));
        for (std::int64_t r = 0; r < r_count; ++r) {
            col[static_cast<std::size_t>(r)] = diag.standardized(r, c);
            pooled.push_back(diag.standardized(r, c));
        }
        diag.tile_mean[static_cast<std::size_t>(c)] = sample_mean(col);
        diag.tile_se[static_cast<std::size_t>(c)] =
            std::sqrt(sample_variance(col) / static_cast<double>(r_count));
        diag.tile_ks[static_cast<std::size_t>(c)] = ks_statistic_normal(col);
    }
    diag.pooled_count = static_cast<std::int64_t>(pooled.size());
    diag.pooled_ks = ks_statistic_normal(std::move(pooled));

    diag.correlation = Eigen::MatrixXd::Identity(t_count, t_count);
    for (std::int64_t a = 0; a < t_count; ++a)
        for (std::int64_t b = a + 1; b < t_count; ++b) {
            double saa = 0.0, sbb = 0.0, sab = 0.0;
            const double ma = diag.tile_mean[static_cast<std::size_t>(a)];
            const double mb = diag.tile_mean[static_cast<std::size_t>(b)];
            for (std::int64_t r = 0; r < r_count; ++r) {
                const double da = diag.standardized(r, a) - ma;
                const double db = diag.standardized(r, b) - mb;
                saa += da * da;
                sbb += db * db;
                sab += da * db;
            }
            const double rho = sab / std::sqrt(saa * sbb);
            diag.correlation(a, b) = diag.correlation(b, a) = rho;
            diag.max_offdiag_correlation =
                std::max(diag.max_offdiag_correlation, std::abs(rho));
        }
    return diag;
}

}  // namespace heatedge
