#include "cascade/offspring.hpp"

#include "cascade/errors.hpp"
#include "cascade/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace cascade {

namespace {

constexpr double kTwoLog2 = 1.3862943611198906188344642429164;

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

void validate_probs(const std::vector<double>& probs, const char* what) {
    double sum = 0.0;
    for (double p : probs) {
        if (p < -1e-12 || p > 1.0 + 1e-12)
            throw ConfigInvalid(std::string(what) + ": probability outside [0, 1]");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ConfigInvalid(std::string(what) + ": probabilities do not sum to 1");
}

// Greatest common divisor of the atom values up to tolerance; 0 if none.
double real_gcd(double a, double b) {
    a = std::fabs(a);
    b = std::fabs(b);
    while (b > 1e-9) {
        const double r = std::fmod(a, b);
        a = b;
        b = (r < 1e-9 || b - r < 1e-9) ? 0.0 : r;
    }
    return a;
}

void detect_lattice(OffspringLaw& law) {
    if (law.kind == OffspringKind::GaussianBinary) {
        law.lattice = false;
        law.lattice_span = 0.0;
        return;
    }
    double g = 0.0;
    for (const Atom& a : law.atoms)
        if (std::fabs(a.value) > 1e-12) g = (g == 0.0) ? std::fabs(a.value) : real_gcd(g, a.value);
    if (g <= 1e-9) {
        law.lattice = false;
        return;
    }
    for (const Atom& a : law.atoms) {
        const double k = a.value / g;
        if (std::fabs(k - std::round(k)) > 1e-7) {
            law.lattice = false;
            return;
        }
    }
    law.lattice = true;
    law.lattice_span = g;
}

// Per-child expectations E[f(V) e^{-V}] for finite-atom laws, exact.
struct AtomMoments {
    double m0 = 0, m1 = 0, m2 = 0, abs3eps = 0;
};

AtomMoments atom_child_moments(const OffspringLaw& law, double eps) {
    AtomMoments m;
    for (const Atom& a : law.atoms) {
        const double w = a.prob * std::exp(-a.value);
        m.m0 += w;
        m.m1 += w * a.value;
        m.m2 += w * a.value * a.value;
        m.abs3eps += w * std::pow(std::fabs(a.value), 3.0 + eps);
    }
    return m;
}

// Enumerates brood outcomes (count, atom indices) for the L-moment.
double atom_l_moment(const OffspringLaw& law, double p) {
    double total = 0.0;
    for (std::size_t k = 0; k < law.count_probs.size(); ++k) {
        const double ck = law.count_probs[k];
        if (ck <= 0.0) continue;
        if (k == 0) continue; // empty brood: L = 0
        double combos = std::pow(static_cast<double>(law.atoms.size()), static_cast<double>(k));
        if (combos > 1 << 20) throw MethodUnsupported("closed-form L-moment: brood too large");
        std::vector<std::size_t> idx(k, 0);
        while (true) {
            double prob = ck;
            double l = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const Atom& a = law.atoms[idx[j]];
                prob *= a.prob;
                l += (1.0 + positive_part(a.value)) * std::exp(-a.value);
            }
            total += prob * l * std::pow(log_plus(l), p);
            std::size_t j = 0;
            while (j < k && ++idx[j] == law.atoms.size()) {
                idx[j] = 0;
                ++j;
            }
            if (j == k) break;
        }
    }
    return total;
}

BoundaryDiagnostics closed_form_diagnostics(const OffspringLaw& law, double eps, double p) {
    if (law.kind == OffspringKind::GaussianBinary)
        throw MethodUnsupported("closed-form diagnostics unavailable for Gaussian laws");
    BoundaryDiagnostics d;
    d.eps = eps;
    d.p = p;
    const AtomMoments m = atom_child_moments(law, eps);
    const double en = law.mean_count();
    d.m0 = en * m.m0;
    d.m1 = en * m.m1;
    d.sigma2 = en * m.m2;
    d.abs_moment3eps = en * m.abs3eps;
    d.l_moment = atom_l_moment(law, p);
    return d;
}

BoundaryDiagnostics quadrature_diagnostics(const OffspringLaw& law, double eps, double p) {
    if (law.kind != OffspringKind::GaussianBinary)
        throw MethodUnsupported("quadrature diagnostics only for Gaussian laws");
    if (law.count_probs.size() != 3 || law.count_probs[2] != 1.0)
        throw MethodUnsupported("quadrature diagnostics assume exactly two children");
    static const num::QuadratureRule rule = num::gauss_hermite(64);
    const double s = std::sqrt(law.gauss_variance);
    const double a = law.gauss_mean;
    const double inv_sqrt_pi = 0.56418958354775628694807945156077;
    BoundaryDiagnostics d;
    d.eps = eps;
    d.p = p;
    double m0 = 0, m1 = 0, m2 = 0, abs3 = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = a + 1.4142135623730951 * s * rule.nodes[i];
        const double w = rule.weights[i] * inv_sqrt_pi * std::exp(-v);
        m0 += w;
        m1 += w * v;
        m2 += w * v * v;
        abs3 += w * std::pow(std::fabs(v), 3.0 + eps);
    }
    d.m0 = 2.0 * m0;
    d.m1 = 2.0 * m1;
    d.sigma2 = 2.0 * m2;
    d.abs_moment3eps = 2.0 * abs3;
    // L couples the two children; tensor-product rule.
    double lm = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v1 = a + 1.4142135623730951 * s * rule.nodes[i];
        const double l1 = (1.0 + positive_part(v1)) * std::exp(-v1);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double v2 = a + 1.4142135623730951 * s * rule.nodes[j];
            const double l = l1 + (1.0 + positive_part(v2)) * std::exp(-v2);
            lm += rule.weights[i] * rule.weights[j] * l * std::pow(log_plus(l), p);
        }
    }
    d.l_moment = lm * inv_sqrt_pi * inv_sqrt_pi;
    return d;
}

BoundaryDiagnostics monte_carlo_diagnostics(const OffspringLaw& law, long budget,
                                            rng::Stream& stream, double eps, double p) {
    if (budget <= 0) throw ConfigInvalid("monte-carlo diagnostics need budget > 0");
    num::Accumulator a0, a1, a2, a3, al;
    std::vector<double> brood;
    for (long rep = 0; rep < budget; ++rep) {
        brood = sample_offspring(law, stream);
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0, l = 0;
        for (double v : brood) {
            const double w = std::exp(-v);
            s0 += w;
            s1 += w * v;
            s2 += w * v * v;
            s3 += w * std::pow(std::fabs(v), 3.0 + eps);
            l += (1.0 + positive_part(v)) * w;
        }
        a0.add(s0);
        a1.add(s1);
        a2.add(s2);
        a3.add(s3);
        al.add(l * std::pow(log_plus(l), p));
    }
    BoundaryDiagnostics d;
    d.eps = eps;
    d.p = p;
    d.m0 = a0.mean();
    d.m1 = a1.mean();
    d.sigma2 = a2.mean();
    d.abs_moment3eps = a3.mean();
    d.l_moment = al.mean();
    d.se_m0 = a0.se();
    d.se_m1 = a1.se();
    d.se_sigma2 = a2.se();
    d.se_abs_moment3eps = a3.se();
    d.se_l_moment = al.se();
    return d;
}

// Tilt-and-scale transform: child law reweighted by e^{theta u} / M(theta),
// displacements mapped to theta*u + a. Counts are unchanged.
OffspringLaw tilt_affine(const OffspringLaw& templ, double theta, double a) {
    OffspringLaw out = templ;
    out.boundary_normalized = false;
    if (templ.kind == OffspringKind::GaussianBinary) {
        const double s2 = templ.gauss_variance;
        out.gauss_mean = theta * (templ.gauss_mean + theta * s2) + a;
        out.gauss_variance = theta * theta * s2;
        return out;
    }
    double m_theta = 0.0;
    for (const Atom& at : templ.atoms) m_theta += at.prob * std::exp(theta * at.value);
    if (!std::isfinite(m_theta) || m_theta <= 0.0)
        throw NoBoundarySolution("tilt exploded: non-finite moment generating function");
    out.atoms.clear();
    for (const Atom& at : templ.atoms)
        out.atoms.push_back({theta * at.value + a, at.prob * std::exp(theta * at.value) / m_theta});
    return out;
}

BoundaryDiagnostics cheap_diagnostics(const OffspringLaw& law) {
    if (law.kind == OffspringKind::GaussianBinary) return quadrature_diagnostics(law, 0.5, 2.5);
    return closed_form_diagnostics(law, 0.5, 2.5);
}

} // namespace

double OffspringLaw::mean_count() const {
    double m = 0.0;
    for (std::size_t k = 0; k < count_probs.size(); ++k) m += static_cast<double>(k) * count_probs[k];
    return m;
}

double OffspringLaw::extinction_probability() const {
    // Smallest fixed point of the generating function, by iteration from 0.
    double q = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        double next = 0.0;
        double qk = 1.0;
        for (std::size_t k = 0; k < count_probs.size(); ++k) {
            next += count_probs[k] * qk;
            qk *= q;
        }
        if (std::fabs(next - q) < 1e-14) return next;
        q = next;
    }
    return q;
}

int OffspringLaw::sample_count(rng::Stream& stream) const {
    const double u = stream.next_double();
    double acc = 0.0;
    for (std::size_t k = 0; k < count_probs.size(); ++k) {
        acc += count_probs[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(count_probs.size()) - 1;
}

double OffspringLaw::sample_displacement(rng::Stream& stream) const {
    if (kind == OffspringKind::GaussianBinary)
        return stream.normal(gauss_mean, std::sqrt(gauss_variance));
    const double u = stream.next_double();
    double acc = 0.0;
    for (const Atom& a : atoms) {
        acc += a.prob;
        if (u < acc) return a.value;
    }
    return atoms.back().value;
}

std::string OffspringLaw::fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << static_cast<int>(kind) << '|';
    for (double p : count_probs) os << p << ',';
    os << '|';
    if (kind == OffspringKind::GaussianBinary) {
        os << gauss_mean << ';' << gauss_variance;
    } else {
        for (const Atom& a : atoms) os << a.value << ':' << a.prob << ';';
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(num::fnv1a64(os.str())));
    return buf;
}

OffspringLaw lattice_boundary_model() {
    const double d = std::log(2.0 + std::sqrt(3.0)); // arccosh(2)
    const double q = (2.0 - std::sqrt(3.0)) / 4.0;
    OffspringLaw law;
    law.kind = OffspringKind::FiniteAtom;
    law.count_probs = {0.0, 0.0, 1.0};
    law.atoms = {{-d, q}, {d, 1.0 - q}};
    law.boundary_normalized = true;
    law.lattice = true;
    law.lattice_span = d;
    law.label = "lattice";
    return law;
}

OffspringLaw gaussian_boundary_model() {
    OffspringLaw law;
    law.kind = OffspringKind::GaussianBinary;
    law.count_probs = {0.0, 0.0, 1.0};
    law.gauss_mean = kTwoLog2;
    law.gauss_variance = kTwoLog2;
    law.boundary_normalized = true;
    law.label = "gaussian";
    return law;
}

OffspringLaw make_finite_atom_law(std::vector<double> count_probs, std::vector<Atom> atoms,
                                  bool as_template) {
    if (atoms.empty()) throw ConfigInvalid("finite-atom law needs at least one atom");
    validate_probs(count_probs, "count law");
    std::vector<double> ap;
    ap.reserve(atoms.size());
    for (const Atom& a : atoms) ap.push_back(a.prob);
    validate_probs(ap, "atom law");
    OffspringLaw law;
    law.kind = as_template ? OffspringKind::UserTemplate : OffspringKind::FiniteAtom;
    law.count_probs = std::move(count_probs);
    law.atoms = std::move(atoms);
    detect_lattice(law);
    return law;
}

OffspringLaw make_gaussian_law(double mean, double variance, bool as_template) {
    if (variance <= 0.0) throw ConfigInvalid("gaussian law needs positive variance");
    OffspringLaw law;
    law.kind = OffspringKind::GaussianBinary;
    law.count_probs = {0.0, 0.0, 1.0};
    law.gauss_mean = mean;
    law.gauss_variance = variance;
    law.label = as_template ? "gaussian-template" : "gaussian-user";
    return law;
}

OffspringLaw normalize_to_boundary(const OffspringLaw& templ, double tol) {
    if (tol <= 0.0) throw ConfigInvalid("normalize_to_boundary: tol must be positive");
    if (templ.mean_count() <= 1.0)
        throw NonSupercritical("normalize_to_boundary: expected child count must exceed 1");
    OffspringLaw base = templ;
    if (base.kind == OffspringKind::UserTemplate) base.kind = OffspringKind::FiniteAtom;

    {
        const BoundaryDiagnostics d = cheap_diagnostics(base);
        if (std::fabs(d.m0 - 1.0) <= tol && std::fabs(d.m1) <= tol) {
            OffspringLaw out = base;
            out.boundary_normalized = true;
            detect_lattice(out);
            return out;
        }
    }

    auto residual = [&](double theta, double a, double* f0, double* f1) {
        const BoundaryDiagnostics d = cheap_diagnostics(tilt_affine(base, theta, a));
        *f0 = d.m0 - 1.0;
        *f1 = d.m1;
    };

    const double newton_tol = std::min(tol, 1e-10);
    for (double theta0 : {1.0, 0.5, 2.0, 3.0}) {
        double theta = theta0, a = 0.0;
        double f0, f1;
        try {
            residual(theta, a, &f0, &f1);
        } catch (const Error&) {
            continue;
        }
        bool ok = false;
        for (int iter = 0; iter < 200; ++iter) {
            const double norm = std::max(std::fabs(f0), std::fabs(f1));
            if (norm <= newton_tol) {
                ok = true;
                break;
            }
            const double ht = 1e-6 * std::max(1.0, std::fabs(theta));
            const double ha = 1e-6 * std::max(1.0, std::fabs(a));
            double f0t, f1t, f0a, f1a;
            try {
                residual(theta + ht, a, &f0t, &f1t);
                residual(theta, a + ha, &f0a, &f1a);
            } catch (const Error&) {
                break;
            }
            const double j00 = (f0t - f0) / ht, j01 = (f0a - f0) / ha;
            const double j10 = (f1t - f1) / ht, j11 = (f1a - f1) / ha;
            const double det = j00 * j11 - j01 * j10;
            if (std::fabs(det) < 1e-300) break;
            double dtheta = -(f1 * j01 - f0 * j11) / det;
            double da = -(f0 * j10 - f1 * j00) / det;
            // Damping: halve the step until the residual norm decreases.
            double step = 1.0;
            bool accepted = false;
            for (int halves = 0; halves < 40; ++halves) {
                const double tn = theta + step * dtheta;
                const double an = a + step * da;
                double g0, g1;
                try {
                    residual(tn, an, &g0, &g1);
                } catch (const Error&) {
                    step *= 0.5;
                    continue;
                }
                if (std::max(std::fabs(g0), std::fabs(g1)) < norm) {
                    theta = tn;
                    a = an;
                    f0 = g0;
                    f1 = g1;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
        }
        if (ok) {
            OffspringLaw out = tilt_affine(base, theta, a);
            const BoundaryDiagnostics d = cheap_diagnostics(out);
            if (std::fabs(d.m0 - 1.0) > tol || std::fabs(d.m1) > tol) continue;
            out.boundary_normalized = true;
            detect_lattice(out);
            if (out.label.empty()) out.label = "normalized";
            return out;
        }
    }
    throw NoBoundarySolution("normalize_to_boundary: Newton iteration did not converge");
}

BoundaryDiagnostics boundary_diagnostics(const OffspringLaw& law, DiagMethod method, long budget,
                                         rng::Stream* stream, double eps, double p) {
    switch (method) {
    case DiagMethod::ClosedForm:
        return closed_form_diagnostics(law, eps, p);
    case DiagMethod::Quadrature:
        return quadrature_diagnostics(law, eps, p);
    case DiagMethod::MonteCarlo: {
        if (stream == nullptr) throw ConfigInvalid("monte-carlo diagnostics need a random stream");
        return monte_carlo_diagnostics(law, budget, *stream, eps, p);
    }
    }
    throw ConfigInvalid("unknown diagnostics method");
}

std::vector<double> sample_offspring(const OffspringLaw& law, rng::Stream& stream) {
    const int k = law.sample_count(stream);
    std::vector<double> brood(static_cast<std::size_t>(k));
    for (double& v : brood) v = law.sample_displacement(stream);
    return brood;
}

double law_sigma2(const OffspringLaw& law) { return cheap_diagnostics(law).sigma2; }

double law_rho(const OffspringLaw& law, double beta) {
    const double en = law.mean_count();
    if (law.kind == OffspringKind::GaussianBinary)
        return en * std::exp(-beta * law.gauss_mean + 0.5 * beta * beta * law.gauss_variance);
    double m = 0.0;
    for (const Atom& a : law.atoms) m += a.prob * std::exp(-beta * a.value);
    return en * m;
}

double c8_constant(const OffspringLaw& law) {
    return std::sqrt(2.0 / (3.1415926535897932384626433832795 * law_sigma2(law)));
}

} // namespace cascade
