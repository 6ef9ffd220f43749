#pragma once

#include "resmeth/core.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace resmeth::bregman {

/// A subgradient of R_p at a point. For p = 1 the entries listed in
/// `free_indices` (zero coordinates) may take any value in [-1, 1]; they are
/// returned as 0.
struct Subgradient {
    Vector xi;
    std::vector<Eigen::Index> free_indices;
};

/// Gradient of R_p for p in (1, 2]; sign pattern plus free set for p = 1.
/// Throws UnsupportedExponent for p < 1.
Subgradient subgradient_lp(const Vector& x_dagger, double p);

/// Source representation xi = F^T omega of a subgradient, with the constants
/// of the source inequality in both parametrizations:
/// gamma1 = eta1 / (1 + eta1), gamma2 = eta2 / (1 + eta1).
struct SourceCertificate {
    Vector xi;
    Vector omega;
    double fit_residual = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
};

struct GammaPair {
    double gamma1;
    double gamma2;
};
struct EtaPair {
    double eta1;
    double eta2;
};

GammaPair gamma_from_eta(EtaPair eta);
/// Requires gamma1 in [0, 1).
EtaPair eta_from_gamma(GammaPair gamma);

/// Fits omega by least squares against F^T. For p = 1 the free entries of xi
/// are fitted jointly by alternating projection onto [-1, 1] (100 rounds),
/// starting from `xi_free_values` when given. The constants follow the linear
/// case: eta1 = 0, eta2 = ||omega||.
SourceCertificate source_certificate(const Matrix& op, const Vector& x_dagger, double p,
                                     const std::optional<Vector>& xi_free_values = std::nullopt);

/// D_xi(x, x_dagger) = R_p(x) - R_p(x_dagger) - <xi, x - x_dagger>.
double bregman_distance(const Vector& x, const Vector& x_dagger, const Vector& xi, double p);

using WeightFunction = std::function<double(const Vector&)>;

/// R_p(x) - R_p(x_dagger) - w(x) + w(x_dagger).
double generalized_bregman(const Vector& x, const Vector& x_dagger, double p, const WeightFunction& w);

/// w(x) = -c ||x - center||_2^q.
WeightFunction norm_power_weight(Vector center, double c, double q);

struct SourceInequalityReport {
    double max_violation = 0.0;
    std::optional<std::size_t> worst_point;
    std::size_t skipped = 0;
};

/// Checks <xi, x_dagger - x> <= gamma1 D_xi(x, x_dagger) + gamma2 ||F x - F x_dagger||
/// on each sample with R_p(x) <= R_p(x_dagger) and, when `radius` is given,
/// ||F x - F x_dagger|| <= 2 radius. Other samples are skipped.
SourceInequalityReport verify_source_inequality(const Matrix& op, const Vector& x_dagger, double p,
                                                const SourceCertificate& certificate,
                                                const std::vector<Vector>& samples,
                                                std::optional<double> radius = std::nullopt);

/// D_xi(x, x_dagger) >= (K / r) ||x - x_dagger||^r with r = 2 and xi the
/// gradient of R_p at x_dagger, p in (1, 2].
bool r_coercivity_check(const Vector& x, const Vector& x_dagger, double p, double K);

/// Smallest ratio D_xi / (||x - x_dagger||^2 / 2) over the pairs; a lower
/// estimate of the coercivity constant.
double empirical_coercivity_constant(const std::vector<std::pair<Vector, Vector>>& pairs, double p);

} // namespace resmeth::bregman
