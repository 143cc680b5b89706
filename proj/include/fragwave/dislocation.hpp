// Dislocation measures and their spectral quantities: the Laplace exponent
// of the tagged-fragment subordinator, the critical exponent, wave speeds,
// and the (tilted) jump measures.

#ifndef FRAGWAVE_DISLOCATION_HPP
#define FRAGWAVE_DISLOCATION_HPP

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "fragwave/rng.hpp"

namespace fragwave {

struct DiscreteAtom {
    double weight;               // splitting rate of this ratio vector
    std::vector<double> ratios;  // descending, in (0,1), sums to 1
};

// The splitting law: either finitely many weighted ratio vectors, or the
// uniform-binary family (s1 uniform on (1/2,1), s2 = 1-s1, total mass 1).
// Conservative and finite-activity by construction.
class DislocationMeasure {
public:
    enum class Kind { DiscreteAtoms, UniformBinary };

    static DislocationMeasure discrete_atoms(std::vector<DiscreteAtom> atoms);
    static DislocationMeasure uniform_binary();

    // the binary-half fixture: one atom of rate 1 splitting into (1/2, 1/2)
    static DislocationMeasure binary_half() {
        return discrete_atoms({{1.0, {0.5, 0.5}}});
    }

    Kind kind() const { return kind_; }
    double total_mass() const { return total_mass_; }  // gamma
    const std::vector<DiscreteAtom>& atoms() const { return atoms_; }

    // draws a ratio vector from the normalized measure; for UniformBinary
    // writes (s, 1-s) with s uniform on (1/2,1)
    void sample_ratios(Rng& rng, std::vector<double>& out) const;

private:
    DislocationMeasure() = default;
    Kind kind_ = Kind::UniformBinary;
    double total_mass_ = 1.0;
    std::vector<DiscreteAtom> atoms_;
    std::vector<double> cum_weights_;  // for sampling DiscreteAtoms
};

// Jump measure of the tagged-fragment subordinator under the p-tilted law:
// m^(p)(dx) = e^{-px} m(dx).
struct JumpLaw {
    double tilt_p = 0.0;
    double total_rate = 0.0;

    bool is_density = false;
    // density variant (UniformBinary): rate density 2 e^{-decay x} on (0,inf)
    double density_decay = 0.0;
    // atoms variant: (jump size, rate), aggregated and sorted by size
    std::vector<std::pair<double, double>> atoms;

    double sample(Rng& rng) const;         // from the normalized law
    double mean_jump() const;              // integral x m^(p)(dx) / total_rate
    double tail_rate(double x) const;      // m^(p)((x, inf))
    double max_jump() const;               // sup of support (inf for density)

private:
    friend class SpectralProfile;
    std::vector<double> cum_rates_;
};

// Cached spectral quantities for one measure. Immutable after construction;
// safe to share across threads.
class SpectralProfile {
public:
    explicit SpectralProfile(DislocationMeasure measure, int quadrature_nodes = 64);

    const DislocationMeasure& measure() const { return measure_; }
    int quadrature_nodes() const { return nodes_; }

    double p_lower() const { return p_lower_; }  // -inf for DiscreteAtoms
    double p_bar() const { return p_bar_; }

    // Laplace exponent of the tagged-fragment subordinator and its derivative
    double phi(double q) const;
    double phi_prime(double q) const;

    // wave speed c_p = phi(p)/(p+1)
    double wave_speed(double p) const;

    // largest nonnegative root of c_p theta - phi(theta+p) + phi(p) = 0,
    // for p in (0, p_bar]; equals 0 at p = p_bar
    double eta_root(double p) const;

    JumpLaw jump_law(double p) const;

    // validates p in (max(p_lower, -1), p_bar] -- the tilt range on which
    // the first-passage lines are dissecting -- and returns c_p
    double require_line_tilt(double p) const;

private:
    void require_domain(double q) const;
    double phi_uniform_binary(double q, bool derivative) const;

    DislocationMeasure measure_;
    int nodes_;
    double p_lower_;
    double p_bar_;
};

} // namespace fragwave

#endif
