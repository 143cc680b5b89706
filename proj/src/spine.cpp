#include "fragwave/spine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fragwave/frag_sim.hpp"
#include "fragwave/quadrature.hpp"
#include "fragwave/stats.hpp"

namespace fragwave {

namespace {

void require_f_zero_at_zero(const TestFunctional& f) {
    if (f.f(0.0) != 0.0)
        throw std::invalid_argument("functional '" + f.name + "' must have f(0) = 0");
}

// effective (eps, c) of the growth envelope for truncation bounds
std::pair<double, double> envelope_params(const TestFunctional& f,
                                          const SpectralProfile& profile, double p) {
    switch (f.envelope) {
        case TestFunctional::Envelope::Bounded:
            return {0.0, f.envelope_c};
        case TestFunctional::Envelope::ExpGrowth:
            return {f.envelope_eps, f.envelope_c};
        case TestFunctional::Envelope::AnyEps: {
            const double eps =
                std::isinf(profile.p_lower()) ? 0.5 : 0.5 * (p - profile.p_lower());
            // x <= e^{eps x} / (e eps): tangency constant for f(x) = x
            return {eps, 1.0 / (M_E * eps)};
        }
    }
    return {0.0, 1.0};
}

} // namespace

double SpinePath::xi(double t) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i)
        sum += jump_sizes[i];
    return sum;
}

double SpinePath::xi_end() const {
    double sum = 0.0;
    for (double s : jump_sizes) sum += s;
    return sum;
}

SpinePath simulate_tagged(const SpectralProfile& profile, double p, double horizon,
                          std::uint64_t seed, std::uint64_t stream) {
    if (!(horizon >= 0.0))
        throw std::invalid_argument("simulate_tagged: horizon must be >= 0");
    const JumpLaw law = profile.jump_law(p);
    SpinePath path;
    path.tilt_p = p;
    path.drift = (std::abs(p + 1.0) < 1e-12) ? 0.0 : profile.wave_speed(p);
    path.horizon = horizon;
    Rng rng(seed, stream);
    double t = 0.0;
    while (true) {
        t += rng.exponential(law.total_rate);
        if (t > horizon) break;
        path.jump_times.push_back(t);
        path.jump_sizes.push_back(law.sample(rng));
    }
    return path;
}

FirstPassage first_passage(const SpectralProfile& profile, double p, double z,
                           std::uint64_t seed, std::uint64_t stream,
                           const PassageControls& controls) {
    if (z < 0.0) throw std::invalid_argument("first_passage: z must be >= 0");
    const double c = profile.wave_speed(p);
    FirstPassage fp;
    fp.level = z;
    if (z == 0.0 && c <= 0.0) {
        // trivial line: with non-positive drift the level is hit immediately
        fp.observed = true;
        fp.tau = 0.0;
        fp.overshoot = 0.0;
        fp.crept = true;
        return fp;
    }
    const JumpLaw law = profile.jump_law(p);
    Rng rng(seed, stream);
    double t = 0.0, y = 0.0;
    while (true) {
        const double wait = rng.exponential(law.total_rate);
        if (c < 0.0) {
            // drift rises between jumps: the level can be crept onto
            const double t_star = (z - y) / (-c);
            if (t_star <= wait) {
                const double tau = t + t_star;
                if (tau > controls.time_cap) return fp;  // not observed
                fp.observed = true;
                fp.tau = tau;
                fp.overshoot = 0.0;
                fp.crept = true;
                return fp;
            }
        }
        t += wait;
        if (t > controls.time_cap) return fp;  // not observed
        y -= c * wait;
        y += law.sample(rng);
        if (y > z) {
            fp.observed = true;
            fp.tau = t;
            fp.overshoot = y - z;
            fp.crept = false;
            return fp;
        }
    }
}

std::vector<double> sample_overshoots(const SpectralProfile& profile, double p, double z,
                                      std::size_t n, std::uint64_t seed,
                                      const PassageControls& controls) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FirstPassage fp = first_passage(profile, p, z, seed, i, controls);
        if (fp.observed) out.push_back(fp.overshoot);
    }
    return out;
}

bool jump_law_is_lattice(const JumpLaw& law) {
    if (law.is_density) return false;
    double g = 0.0;
    for (const auto& [x, r] : law.atoms) {
        double a = std::max(g, x), b = std::min(g, x);
        while (b > 1e-12) {
            const double r2 = std::fmod(a, b);
            a = b;
            b = r2;
        }
        g = a;
    }
    if (!(g > 1e-12)) return false;
    for (const auto& [x, r] : law.atoms)
        if (std::abs(x - std::round(x / g) * g) > 1e-9) return false;
    return true;
}

QSmallResult q_small(const SpectralProfile& profile, double p, const TestFunctional& f) {
    require_f_zero_at_zero(f);
    require_admissible(f, profile, p);
    if (p > 0.0)
        throw std::domain_error("q_small: p must be <= 0 (use q_large above 0)");
    const double c = profile.require_line_tilt(p);

    QSmallResult res;
    const JumpLaw m = profile.jump_law(0.0);
    res.lattice_flagged = jump_law_is_lattice(m);

    const double denom = profile.phi_prime(p) - c;
    double integral = 0.0;
    if (!m.is_density) {
        for (const auto& [x, rate] : m.atoms)
            integral += rate * f.F(x) * std::exp(-p * x);
    } else {
        // int F(y) e^{-py} m(dy) with m density 2 e^{-2y}; truncated panels
        const auto [eps, cenv] = envelope_params(f, profile, p);
        const double decay = p + 2.0 - eps;
        if (!(decay > 0.0))
            throw std::domain_error("q_small: envelope too wide for the jump tail");
        const double cutoff = 45.0 / decay;
        integral = gl_integrate_panels(
            [&](double y) { return f.F(y) * std::exp(-p * y) * 2.0 * std::exp(-2.0 * y); },
            0.0, cutoff, 12, profile.quadrature_nodes());
        if (eps > 0.0)
            res.truncation_bound =
                (2.0 * cenv / eps) * std::exp(-decay * cutoff) / decay;
        else
            res.truncation_bound = 2.0 * cenv * std::exp(-decay * cutoff) *
                                   (cutoff / decay + 1.0 / (decay * decay));
    }
    res.value = integral / denom;
    return res;
}

QLargeResult q_large(const SpectralProfile& profile, double p, const TestFunctional& f,
                     std::size_t n_samples, std::uint64_t seed) {
    require_f_zero_at_zero(f);
    require_admissible(f, profile, p);
    if (!(p > 0.0) || p > profile.p_bar() + 1e-12)
        throw std::domain_error("q_large: p must lie in (0, p_bar]");
    if (n_samples == 0) throw std::invalid_argument("q_large: n_samples must be positive");

    const std::vector<double> overshoots =
        sample_overshoots(profile, p, 0.0, n_samples, seed);
    if (overshoots.empty()) throw std::runtime_error("q_large: no passages observed");

    const double n = static_cast<double>(overshoots.size());
    double mf = 0.0, mo = 0.0;
    std::vector<double> fs(overshoots.size());
    for (std::size_t i = 0; i < overshoots.size(); ++i) {
        fs[i] = f.F(overshoots[i]);
        mf += fs[i];
        mo += overshoots[i];
    }
    mf /= n;
    mo /= n;
    if (mo == 0.0) throw std::runtime_error("q_large: degenerate zero denominator");

    const double ratio = mf / mo;
    // delta-method variance of a ratio estimator
    double sff = 0.0, soo = 0.0, sfo = 0.0;
    for (std::size_t i = 0; i < overshoots.size(); ++i) {
        const double df = fs[i] - mf, dd = overshoots[i] - mo;
        sff += df * df;
        soo += dd * dd;
        sfo += df * dd;
    }
    const double m = n > 1 ? n - 1 : 1;
    sff /= m;
    soo /= m;
    sfo /= m;
    QLargeResult res;
    res.value = ratio;
    res.std_error =
        std::sqrt(std::max(0.0, sff - 2.0 * ratio * sfo + ratio * ratio * soo) / n) / mo;
    res.n_samples = overshoots.size();
    return res;
}

LadderHeightCheck ladder_height_check(const SpectralProfile& profile, double p,
                                      double eps) {
    if (!(p > 0.0) || p > profile.p_bar() + 1e-12)
        throw std::domain_error("ladder_height_check: p must lie in (0, p_bar]");
    if (!(eps > 0.0) || !(p - eps > profile.p_lower()))
        throw std::domain_error(
            "ladder_height_check: need eps > 0 with |phi(p - eps)| < inf");

    LadderHeightCheck out;
    out.eta = profile.eta_root(p);
    out.rhs = (profile.phi(p + out.eta) - profile.phi(p - eps)) / (out.eta + eps);

    const JumpLaw law = profile.jump_law(p);
    const double eta = out.eta;
    const int nodes = profile.quadrature_nodes();

    // inner(x) = int_x^inf e^{-eta (y - x)} tail(y) dy
    auto inner = [&](double x) {
        if (law.is_density) {
            const double span = 45.0 / law.density_decay;
            return gl_integrate_panels(
                [&](double u) { return std::exp(-eta * u) * law.tail_rate(x + u); }, 0.0,
                span, 10, nodes);
        }
        // piecewise-constant tail with steps at the atoms
        double sum = 0.0;
        double a = x;
        for (const auto& [xi, r] : law.atoms) {
            if (xi <= x) continue;
            const double t = law.tail_rate(a);
            const double b = xi;
            sum += eta > 0.0 ? t * (std::exp(-eta * (a - x)) - std::exp(-eta * (b - x))) / eta
                             : t * (b - a);
            a = b;
        }
        return sum;
    };
    auto density = [&](double x) { return law.tail_rate(x) - eta * inner(x); };

    if (law.is_density) {
        const double decay = law.density_decay - eps;  // positive by admissibility
        const double cutoff = 45.0 / decay;
        out.lhs = gl_integrate_panels(
            [&](double x) { return std::exp(eps * x) * density(x); }, 0.0, cutoff, 10,
            nodes);
    } else {
        // density vanishes beyond the largest jump; panelize between atoms
        double lhs = 0.0, a = 0.0;
        for (const auto& [xi, r] : law.atoms) {
            lhs += gl_integrate(
                [&](double x) { return std::exp(eps * x) * density(x); }, a, xi, nodes);
            a = xi;
        }
        out.lhs = lhs;
    }
    return out;
}

ManyToOneCheck many_to_one_check(const SpectralProfile& profile, double p, double t,
                                 const std::function<double(double)>& g,
                                 std::size_t n_tree_runs, std::size_t n_spine_paths,
                                 std::uint64_t seed) {
    if (!(t >= 0.0)) throw std::invalid_argument("many_to_one_check: t must be >= 0");
    if (n_tree_runs == 0 || n_spine_paths == 0)
        throw std::invalid_argument("many_to_one_check: need positive sample counts");

    const double phi_p = profile.phi(p);
    std::vector<double> tree(n_tree_runs);
    SimControls controls;
    for (std::size_t r = 0; r < n_tree_runs; ++r) {
        double stat = 0.0;
        simulate_with_snapshots(
            profile.measure(), t, seed, r, controls, {t},
            [&](std::size_t, double, const FragTrajectory& traj) {
                double sum = 0.0;
                traj.for_each_alive(t, [&](std::size_t i) {
                    sum += std::exp(-(p + 1.0) * traj.x[i]) * g(traj.x[i]);
                });
                stat = sum * std::exp(phi_p * t);
            },
            false);
        tree[r] = stat;
    }

    const JumpLaw law = profile.jump_law(p);
    std::vector<double> spine(n_spine_paths);
    for (std::size_t j = 0; j < n_spine_paths; ++j) {
        Rng rng(seed, n_tree_runs + j);
        double tt = rng.exponential(law.total_rate), xi = 0.0;
        while (tt <= t) {
            xi += law.sample(rng);
            tt += rng.exponential(law.total_rate);
        }
        spine[j] = g(xi);
    }

    ManyToOneCheck out;
    const Summary st = summarize(tree), ss = summarize(spine);
    out.tree_mean = st.mean;
    out.tree_se = st.std_error;
    out.spine_mean = ss.mean;
    out.spine_se = ss.std_error;
    const double denom = std::sqrt(st.std_error * st.std_error + ss.std_error * ss.std_error);
    out.z_score = denom > 0.0 ? (st.mean - ss.mean) / denom
                              : (st.mean == ss.mean ? 0.0
                                                    : std::numeric_limits<double>::infinity());
    return out;
}

} // namespace fragwave
