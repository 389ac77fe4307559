#pragma once

// Offspring displacement laws for the branching random walk and their
// boundary-case diagnostics. A law is the pair (child count distribution,
// per-child displacement distribution) with children i.i.d. given the count.
// Laws are immutable value objects; normalization returns a new law.

#include "cascade/rng.hpp"

#include <string>
#include <vector>

namespace cascade {

enum class OffspringKind { FiniteAtom, GaussianBinary, UserTemplate };
enum class DiagMethod { ClosedForm, Quadrature, MonteCarlo };

struct Atom {
    double value = 0.0;
    double prob = 0.0;
};

struct OffspringLaw {
    OffspringKind kind = OffspringKind::FiniteAtom;

    // P[#children = k] at index k. Built-in models use {0, 0, 1}.
    std::vector<double> count_probs;

    // Per-child displacement: either atoms, or a normal(mean, variance).
    std::vector<Atom> atoms;
    double gauss_mean = 0.0;
    double gauss_variance = 1.0;

    bool iid_children = true;
    bool boundary_normalized = false;
    bool lattice = false;
    double lattice_span = 0.0;
    std::string label;

    double mean_count() const;
    double extinction_probability() const; // smallest fixed point of the count pgf
    bool has_gaussian_child() const { return kind == OffspringKind::GaussianBinary; }

    int sample_count(rng::Stream& stream) const;
    double sample_displacement(rng::Stream& stream) const;

    std::string fingerprint() const;
};

struct BoundaryDiagnostics {
    double m0 = 0.0;             // E[sum e^{-V}]
    double m1 = 0.0;             // E[sum V e^{-V}]
    double sigma2 = 0.0;         // E[sum V^2 e^{-V}]
    double abs_moment3eps = 0.0; // E[sum |V|^{3+eps} e^{-V}]
    double l_moment = 0.0;       // E[L (log+ L)^p], L = sum (1+V+) e^{-V}
    double eps = 0.5;
    double p = 2.5;
    double se_m0 = 0.0;
    double se_m1 = 0.0;
    double se_sigma2 = 0.0;
    double se_abs_moment3eps = 0.0;
    double se_l_moment = 0.0;
};

// Binary lattice model: two children, displacements +/- d with
// d = arccosh(2) and P[-d] = (2 - sqrt(3))/4. Exactly boundary-normalized.
OffspringLaw lattice_boundary_model();

// Binary Gaussian model: two children, Normal(2 log 2, 2 log 2) displacements.
OffspringLaw gaussian_boundary_model();

OffspringLaw make_finite_atom_law(std::vector<double> count_probs, std::vector<Atom> atoms,
                                  bool as_template = false);
OffspringLaw make_gaussian_law(double mean, double variance, bool as_template = false);

// Reparametrizes the template's displacements as V = theta*U + a, with atom
// weights exponentially tilted by e^{theta u}, and solves for (theta, a)
// putting the law in the boundary case. Damped Newton on the moment
// residuals with a numerically differenced Jacobian.
OffspringLaw normalize_to_boundary(const OffspringLaw& templ, double tol);

BoundaryDiagnostics boundary_diagnostics(const OffspringLaw& law, DiagMethod method,
                                         long budget = 0, rng::Stream* stream = nullptr,
                                         double eps = 0.5, double p = 2.5);

std::vector<double> sample_offspring(const OffspringLaw& law, rng::Stream& stream);

// sigma^2 = E[sum V^2 e^{-V}] by the cheapest exact route for the law.
double law_sigma2(const OffspringLaw& law);

// rho(beta) = E[sum e^{-beta V}] in closed form.
double law_rho(const OffspringLaw& law, double beta);

// sqrt(2 / (pi sigma^2)), the mass-to-derivative-limit conversion constant.
double c8_constant(const OffspringLaw& law);

} // namespace cascade
