#pragma once

#include "eitlab/dtn.hpp"
#include "eitlab/geometry.hpp"
#include "eitlab/mesh.hpp"
#include "eitlab/shape_deriv.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eitlab {

/// Below this the two DtN maps are treated as indistinguishable.
inline constexpr double kOpDiffFloor = 1e-13;

struct StabilityRecord {
    PiecewiseConductivity c1;
    PiecewiseConductivity c2;
    double l1_diff = 0.0;  ///< ||gamma1 - gamma2||_{L1}
    double l2_diff = 0.0;
    double op_diff = 0.0;  ///< ||Lambda1 - Lambda2||_*
    double ratio = 0.0;    ///< l1_diff / op_diff, meaningful only when !flagged
    bool flagged = false;  ///< op_diff below kOpDiffFloor
    double hausdorff = 0.0;
    double sym_diff = 0.0;
    double vertex_motion = 0.0;  ///< sum of matched vertex distances (0 for unequal counts)
    double k_diff = 0.0;         ///< |k2 - k1|
    double mesh_h = 0.0;
    std::uint64_t seed = 0;
};

/// Perturbs every vertex by a uniform vector of norm <= eps and k by a uniform
/// value in [-eps, eps], resampling (at most 100 times) until admissible.
/// Throws SamplingError when every try fails.
PiecewiseConductivity sample_admissible_pair(const PriorInfo& pi, const Domain& omega,
                                             const PiecewiseConductivity& base, double eps, std::uint64_t seed);

/// Both DtN maps on one mesh conforming to both polygons.
StabilityRecord stability_ratio(const Domain& omega, const PiecewiseConductivity& c1, const PiecewiseConductivity& c2,
                                double mesh_h, std::uint64_t seed = 0);

struct VertexCountReport {
    bool claim = false;         ///< op_diff <= delta0, so the counts must agree
    bool counts_equal = false;
    bool violated = false;      ///< claim made but the counts differ
    double op_diff = 0.0;
    double hausdorff = 0.0;
    double max_vertex_distance = 0.0;  ///< matched, when the counts agree
    double distance_ratio = 0.0;       ///< max_vertex_distance / hausdorff (0 when hausdorff == 0)
};

VertexCountReport vertex_count_recovery(const StabilityRecord& rec, double delta0);
VertexCountReport vertex_count_recovery(const Domain& omega, const PiecewiseConductivity& c1,
                                        const PiecewiseConductivity& c2, double delta0, double mesh_h);

struct LowerBound {
    double m0_hat = 0.0;
    double normalization = 0.0;  ///< v + |k|
    /// Maximizing traces, unit in the H^{1/2} Gram norm; psi = phi up to sign.
    Eigen::VectorXd phi;
    Eigen::VectorXd psi;
    /// dF/dt|_0 (phi, psi) for the unnormalized path; equals +- m0_hat (v + |k|).
    double derivative = 0.0;
};

/// Largest singular value of the whitened boundary operator of
/// dF/dt|_0 / (v + |k|). Throws DegeneratePath when v + |k| == 0.
LowerBound lower_bound_probe(const PerturbationPath& path, const TriMesh& mesh,
                             TraceConvention conv = TraceConvention::outside);

struct CampaignConfig {
    Domain omega;
    PiecewiseConductivity base;
    PriorInfo pi;
    std::vector<double> eps_ladder;
    int samples = 10;  ///< per eps
    std::vector<double> mesh_ladder{0.05};
    std::uint64_t seed = 1;
    /// When absent, calibrated from the campaign's own records.
    std::optional<double> delta0;
};

struct CampaignRow {
    std::size_t index = 0;
    double eps = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    StabilityRecord record;
    VertexCountReport vertex;
};

struct CampaignResult {
    std::vector<CampaignRow> rows;
    double empirical_C = 0.0;    ///< max ratio over unflagged records
    double median_ratio = 0.0;
    double slope = 0.0;          ///< log-log slope of l1_diff against op_diff
    std::size_t fit_points = 0;
    double delta0 = 0.0;
    std::string delta0_source;   ///< "config", "calibrated" or "none"
    double hausdorff_C = 0.0;    ///< smallest C with d_H <= C sqrt(|P1 sym diff P2|)
    std::size_t failures = 0;
};

/// Deterministic given cfg.seed: pair i of eps e uses a seed derived from
/// (cfg.seed, e index, i). Failed records are kept with their error text.
CampaignResult run_campaign(const CampaignConfig& cfg);

/// Least-squares slope of log y against log x over positive pairs.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_records_csv(std::ostream& out, const std::vector<CampaignRow>& rows);
void write_campaign_summary(std::ostream& out, const CampaignResult& result);

}  // namespace eitlab
