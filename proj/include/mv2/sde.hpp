#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mv2/drift.hpp"
#include "mv2/errors.hpp"
#include "mv2/model.hpp"
#include "mv2/moments.hpp"

namespace mv2 {

// Pre-generated Gaussian increments, N(0, dt) per (species, particle, step).
// Regeneration from the same seed is bit-identical: the tape uses mt19937_64
// with an explicit Box-Muller transform, nothing implementation-defined.
// The tape doubles as the coupling device: two systems stepped against the
// same tape consume identical increments.
class NoiseTape {
public:
    NoiseTape(std::uint64_t seed, int n_x, int n_y, int n_steps, double dt,
              bool antithetic_pairs = false);
    // Explicit per-species stream seeds (species-swap experiments).
    NoiseTape(std::uint64_t seed_x, std::uint64_t seed_y, int n_x, int n_y, int n_steps, double dt,
              bool antithetic_pairs, bool);

    double dw(Species s, int particle, int step) const {
        const auto& block = (s == Species::X) ? wx_ : wy_;
        return block[static_cast<std::size_t>(particle) * static_cast<std::size_t>(n_steps_) +
                     static_cast<std::size_t>(step)];
    }
    int steps() const { return n_steps_; }
    int count(Species s) const { return s == Species::X ? n_x_ : n_y_; }
    double dt() const { return dt_; }

private:
    void fill(std::vector<double>& block, std::uint64_t seed, int n_particles, bool antithetic);
    int n_x_, n_y_, n_steps_;
    double dt_;
    std::vector<double> wx_, wy_;
};

// Positions of the two species plus the seed the ensemble was built from.
struct Ensemble {
    std::vector<double> x;
    std::vector<double> y;
    double t = 0.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

struct PointMass {
    double x0 = 0.0;
};
struct GaussianInit {
    double mean = 0.0;
    double var = 1.0;
};
struct UniformInit {
    double lo = -1.0;
    double hi = 1.0;
};
using InitialCondition = std::variant<PointMass, GaussianInit, UniformInit>;

// i.i.d. draws; with antithetic=true consecutive draws come in (z, -z) pairs
// about the distribution's center of symmetry (n must be even).
std::vector<double> sample_initial(const InitialCondition& ic, int n, std::uint64_t seed,
                                   bool antithetic = false);

Ensemble make_ensemble(const ModelConfig& cfg, int n_x, int n_y, const InitialCondition& init_x,
                       const InitialCondition& init_y, std::uint64_t seed, bool antithetic = false);

struct SimParams {
    double dt = 1e-3;
    int n_steps = 1;
    std::uint64_t seed = 0;
    int record_stride = 1;
};

enum class PairwiseMode { automatic, direct, moment_expansion };

// One Euler-Maruyama step of the interacting particle system. Pairwise sums
// run over all j including j = i (the self term vanishes since the odd
// gradients are zero at 0). The moment-expansion path is exact for
// polynomial gradients and is the default for q <= 3.
Ensemble em_step_interacting(Ensemble ens, const ModelConfig& cfg, double dt, const NoiseTape& noise,
                             int step, PairwiseMode mode = PairwiseMode::automatic);

// One EM step under an external drift tuple: X-particles feel -V1'-b1-b2,
// Y-particles -V2'-b3-b4; particles do not interact.
Ensemble em_step_external(Ensemble ens, const ModelConfig& cfg, const DriftPair& drift, double dt,
                          const NoiseTape& noise, int step);

struct Trajectory {
    std::vector<double> times;                 // every step, 0..n_steps
    std::vector<MomentVector> x_moments;       // every step
    std::vector<MomentVector> y_moments;
    std::vector<int> recorded_steps;           // strided
    std::vector<std::vector<double>> x_snapshots;
    std::vector<std::vector<double>> y_snapshots;
    int moment_order = 4;
};

struct InteractingMode {
    PairwiseMode pairwise = PairwiseMode::automatic;
};
struct ExternalMode {
    const DriftPair* drift = nullptr;
};
using SimMode = std::variant<InteractingMode, ExternalMode>;

// Deterministic function of (ens0, cfg, params.seed): the tape is generated
// up front from params.seed.
Trajectory simulate(const Ensemble& ens0, const ModelConfig& cfg, const SimParams& params,
                    const SimMode& mode);

// CSV export: `t,species,index,position` (strided snapshots).
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
// CSV export: `t,species,m0,m1,m2,m3,m4`.
void write_moments_csv(const std::string& path, const Trajectory& traj);

} // namespace mv2
