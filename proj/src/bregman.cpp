#include "resmeth/bregman.hpp"
#include "resmeth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resmeth::bregman {

namespace {

void check_convex_exponent(double p)
{
    if (!(p >= 1.0 && p <= 2.0))
        throw UnsupportedExponent("subgradients are only provided for p in [1, 2]");
}

} // namespace

Subgradient subgradient_lp(const Vector& x_dagger, double p)
{
    check_convex_exponent(p);
    check_finite(x_dagger, "x_dagger");
    Subgradient g;
    g.xi = Vector::Zero(x_dagger.size());
    for (Eigen::Index i = 0; i < x_dagger.size(); ++i) {
        const double v = x_dagger[i];
        if (v == 0.0) {
            if (p == 1.0)
                g.free_indices.push_back(i);
            continue;
        }
        const double s = v > 0.0 ? 1.0 : -1.0;
        g.xi[i] = p == 1.0 ? s : p * s * std::pow(std::abs(v), p - 1.0);
    }
    return g;
}

GammaPair gamma_from_eta(EtaPair eta)
{
    return {eta.eta1 / (1.0 + eta.eta1), eta.eta2 / (1.0 + eta.eta1)};
}

EtaPair eta_from_gamma(GammaPair gamma)
{
    if (!(gamma.gamma1 >= 0.0 && gamma.gamma1 < 1.0))
        throw InvalidInput("gamma1 must lie in [0, 1)");
    return {gamma.gamma1 / (1.0 - gamma.gamma1), gamma.gamma2 / (1.0 - gamma.gamma1)};
}

SourceCertificate source_certificate(const Matrix& op, const Vector& x_dagger, double p,
                                     const std::optional<Vector>& xi_free_values)
{
    if (x_dagger.size() != op.cols())
        throw InvalidInput("x_dagger length does not match operator columns");
    Subgradient g = subgradient_lp(x_dagger, p);
    const Eigen::CompleteOrthogonalDecomposition<Matrix> adjoint(op.transpose());

    SourceCertificate cert;
    cert.xi = std::move(g.xi);
    if (xi_free_values) {
        if (xi_free_values->size() != op.cols())
            throw InvalidInput("xi_free_values must have one entry per column");
        for (Eigen::Index i : g.free_indices)
            cert.xi[i] = std::clamp((*xi_free_values)[i], -1.0, 1.0);
    }
    cert.omega = adjoint.solve(cert.xi);
    if (!g.free_indices.empty()) {
        constexpr int kRounds = 100;
        for (int round = 0; round < kRounds; ++round) {
            const Vector fitted = op.transpose() * cert.omega;
            for (Eigen::Index i : g.free_indices)
                cert.xi[i] = std::clamp(fitted[i], -1.0, 1.0);
            cert.omega = adjoint.solve(cert.xi);
        }
    }
    cert.fit_residual = (op.transpose() * cert.omega - cert.xi).norm();
    cert.eta1 = 0.0;
    cert.eta2 = cert.omega.norm();
    const GammaPair gamma = gamma_from_eta({cert.eta1, cert.eta2});
    cert.gamma1 = gamma.gamma1;
    cert.gamma2 = gamma.gamma2;
    return cert;
}

double bregman_distance(const Vector& x, const Vector& x_dagger, const Vector& xi, double p)
{
    if (x.size() != x_dagger.size() || xi.size() != x.size())
        throw InvalidInput("dimension mismatch in bregman_distance");
    return regularizer_value(x, p) - regularizer_value(x_dagger, p) - xi.dot(x - x_dagger);
}

double generalized_bregman(const Vector& x, const Vector& x_dagger, double p, const WeightFunction& w)
{
    if (x.size() != x_dagger.size())
        throw InvalidInput("dimension mismatch in generalized_bregman");
    return regularizer_value(x, p) - regularizer_value(x_dagger, p) - w(x) + w(x_dagger);
}

WeightFunction norm_power_weight(Vector center, double c, double q)
{
    return [center = std::move(center), c, q](const Vector& x) { return -c * std::pow((x - center).norm(), q); };
}

SourceInequalityReport verify_source_inequality(const Matrix& op, const Vector& x_dagger, double p,
                                                const SourceCertificate& certificate,
                                                const std::vector<Vector>& samples, std::optional<double> radius)
{
    SourceInequalityReport report;
    const double r_dagger = regularizer_value(x_dagger, p);
    const Vector image = op * x_dagger;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vector& x = samples[i];
        const double misfit = (op * x - image).norm();
        if (regularizer_value(x, p) > r_dagger || (radius && misfit > 2.0 * *radius)) {
            ++report.skipped;
            continue;
        }
        const double lhs = certificate.xi.dot(x_dagger - x);
        const double rhs = certificate.gamma1 * bregman_distance(x, x_dagger, certificate.xi, p) +
                           certificate.gamma2 * misfit;
        const double violation = lhs - rhs;
        if (violation > worst) {
            worst = violation;
            report.worst_point = i;
        }
    }
    report.max_violation = std::max(0.0, worst);
    return report;
}

bool r_coercivity_check(const Vector& x, const Vector& x_dagger, double p, double K)
{
    if (!(p > 1.0 && p <= 2.0))
        throw UnsupportedExponent("r-coercivity is checked for p in (1, 2]");
    constexpr double r = 2.0;
    const Vector xi = subgradient_lp(x_dagger, p).xi;
    const double d = bregman_distance(x, x_dagger, xi, p);
    // Cancellation in D is of the order of eps * (R(x) + R(x_dagger)).
    const double slack = 1e-12 * (regularizer_value(x, p) + regularizer_value(x_dagger, p));
    return d + slack >= (K / r) * std::pow((x - x_dagger).norm(), r);
}

double empirical_coercivity_constant(const std::vector<std::pair<Vector, Vector>>& pairs, double p)
{
    double k = std::numeric_limits<double>::infinity();
    for (const auto& [x, x_dagger] : pairs) {
        const double dist2 = (x - x_dagger).squaredNorm();
        if (dist2 == 0.0)
            continue;
        const Vector xi = subgradient_lp(x_dagger, p).xi;
        k = std::min(k, bregman_distance(x, x_dagger, xi, p) / (0.5 * dist2));
    }
    return k;
}

} // namespace resmeth::bregman
