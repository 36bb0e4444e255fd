#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfmseg/series.hpp"
#include "tfmseg/tensor.hpp"

namespace tfmseg {

enum class Scenario { s0, s1, s2, s3 };
enum class Spacing { equal, unequal };

const char* scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);
const char* spacing_name(Spacing s);
Spacing parse_spacing(const std::string& name);

// Monte Carlo scenario description. S0 is a null model without changes, S1
// applies one transform per change (lower-triangular, rank-deficient diagonal,
// dense random), S2 adds simultaneous changes in further modes at the first
// and third change (one of them a pure scalar rescaling), S3 places a single
// rank-deficient change in mode 1 at mid-sample. S1 through S3 are defined for
// order-3 tensors with ranks (3,3,3).
struct SimScenario {
    Scenario scenario = Scenario::s1;
    Index length = 400;
    Dims dims = {10, 10, 10};
    Dims ranks = {3, 3, 3};
    double rho = 0.0;
    Spacing spacing = Spacing::equal;
    bool missing = false;
    bool store_common = false;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
};

// Factor-space size of one change: per-mode Frobenius norms of the shift in
// the mode-wise pseudo-factor covariance, and their Euclidean aggregate.
struct ChangeSize {
    std::vector<double> per_mode;
    double total = 0.0;
};

// Everything the generator knows about a realisation. Transforms are
// per-change (segment j+1 loadings = segment j loadings times transforms[j]),
// mode_sets lists the modes whose change survives trace normalisation.
// factors holds vec(F_t) by column; common is filled only on request.
struct GroundTruth {
    std::vector<Index> locations;
    std::vector<std::vector<Index>> mode_sets;
    std::vector<Matrix> base_loadings;
    std::vector<std::vector<Matrix>> transforms;
    std::vector<std::vector<Matrix>> segment_loadings;
    std::vector<ChangeSize> sizes;
    Matrix factors;
    Matrix common;

    Index segment_count() const { return static_cast<Index>(locations.size()) + 1; }
};

struct Realisation {
    TensorSeries series;
    GroundTruth truth;
};

// Change locations used by the scenario templates: quarter points when equal,
// {T/4, T/2, 5T/8} (floored) when unequal; S3 uses {T/2}; S0 none.
std::vector<Index> template_locations(Scenario scenario, Spacing spacing, Index length);

// Draws one realisation. All randomness comes from a counter-based stream
// keyed by (seed, stream), so equal scenarios give bit-identical output and
// distinct streams can run in parallel. Draw order: base loadings by mode
// (column-major within each), random transform entries (lower triangle of the
// first change's mode-1 transform row-major, then the dense third transform
// column-major), the factor chain (initial state, 100 warm-up transitions,
// one transition per stored observation), then noise entry by entry in
// storage order, column by column.
Realisation generate(const SimScenario& sc);

// Mode-wise covariance of the pseudo-factor in a segment, evaluated in closed
// form from the cumulative transforms: the product of the other modes'
// squared Frobenius norms times B B^T for this mode's cumulative transform B.
Matrix population_mode_covariance(const GroundTruth& gt, Index segment, Index k);

// Size of change j per the closed form above; change indices are 0-based.
ChangeSize size_of_change(const GroundTruth& gt, Index j);

// Modes whose covariance shift at change j survives trace normalisation,
// i.e. would be flagged by an oracle attribution with exact covariances.
std::vector<Index> identifiable_modes(const GroundTruth& gt, Index j, double tol = 1e-9);

}  // namespace tfmseg
