#include "eitlab/probes.hpp"

#include "eitlab/errors.hpp"
#include "eitlab/fem.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace eitlab {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

PiecewiseConductivity sample_admissible_pair(const PriorInfo& pi, const Domain& omega,
                                             const PiecewiseConductivity& base, double eps, std::uint64_t seed) {
    if (!(eps >= 0.0)) throw PreconditionError("eps must be nonnegative");
    if (eps == 0.0) return base;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<Vec2> verts = base.polygon.vertices();
        for (Vec2& v : verts) {
            const double rad = eps * std::sqrt(unit(rng));
            const double ang = 2.0 * std::numbers::pi * unit(rng);
            v += Vec2{rad * std::cos(ang), rad * std::sin(ang)};
        }
        const double k = base.k + eps * (2.0 * unit(rng) - 1.0);
        try {
            PiecewiseConductivity c{Polygon(std::move(verts)), k};
            if (validate_polygon(c.polygon, omega, pi).admissible() && validate_conductivity(c.k, pi)) return c;
        } catch (const GeometryError&) {
            // not a simple polygon; draw again
        }
    }
    throw SamplingError("no admissible perturbation found in 100 tries (eps=" + std::to_string(eps) + ")");
}

StabilityRecord stability_ratio(const Domain& omega, const PiecewiseConductivity& c1, const PiecewiseConductivity& c2,
                                double mesh_h, std::uint64_t seed) {
    StabilityRecord rec;
    rec.c1 = c1;
    rec.c2 = c2;
    rec.mesh_h = mesh_h;
    rec.seed = seed;
    const DiffNorms dn = conductivity_diff_norms(c1, c2);
    rec.l1_diff = dn.l1;
    rec.l2_diff = dn.l2;
    rec.hausdorff = hausdorff_boundary(c1.polygon, c2.polygon);
    rec.sym_diff = symmetric_difference_area(c1.polygon, c2.polygon);
    rec.k_diff = std::abs(c2.k - c1.k);
    if (c1.polygon.size() == c2.polygon.size())
        rec.vertex_motion = total_vertex_displacement(match_vertices(c1.polygon, c2.polygon));

    std::vector<Polygon> interfaces{c1.polygon};
    if (!c1.polygon.same_shape(c2.polygon)) interfaces.push_back(c2.polygon);
    MeshOptions opts;
    opts.target_h = mesh_h;
    const TriMesh mesh = triangulate(omega, interfaces, opts);
    const DtnMatrix L1 = assemble_dtn(mesh, c1);
    const DtnMatrix L2 = assemble_dtn(mesh, c2);
    rec.op_diff = op_norm_diff(L1, L2, assemble_half_gram(mesh));
    rec.flagged = rec.op_diff < kOpDiffFloor;
    rec.ratio = rec.flagged ? 0.0 : rec.l1_diff / rec.op_diff;
    return rec;
}

VertexCountReport vertex_count_recovery(const StabilityRecord& rec, double delta0) {
    VertexCountReport r;
    r.op_diff = rec.op_diff;
    r.hausdorff = rec.hausdorff;
    r.claim = rec.op_diff <= delta0;
    r.counts_equal = rec.c1.polygon.size() == rec.c2.polygon.size();
    r.violated = r.claim && !r.counts_equal;
    if (r.counts_equal) {
        r.max_vertex_distance = match_vertices(rec.c1.polygon, rec.c2.polygon).max_distance;
        r.distance_ratio = r.hausdorff > 0.0 ? r.max_vertex_distance / r.hausdorff : 0.0;
    }
    return r;
}

VertexCountReport vertex_count_recovery(const Domain& omega, const PiecewiseConductivity& c1,
                                        const PiecewiseConductivity& c2, double delta0, double mesh_h) {
    return vertex_count_recovery(stability_ratio(omega, c1, c2, mesh_h), delta0);
}

LowerBound lower_bound_probe(const PerturbationPath& path, const TriMesh& mesh, TraceConvention conv) {
    LowerBound lb;
    lb.normalization = path.vertex_motion() + std::abs(path.k_diff());
    if (lb.normalization == 0.0) throw DegeneratePath("zero perturbation: v + |k| = 0");
    const DirichletSolver solver(mesh, path.base);
    const Eigen::MatrixXd H = solver.extension_form(derivative_form(path, mesh, conv));
    const HalfGram N = assemble_half_gram(mesh);
    const Eigen::MatrixXd Hn = 0.5 * (H + H.transpose()) / lb.normalization;
    const Eigen::MatrixXd W = N.inv_sqrt * Hn * N.inv_sqrt;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()));
    if (es.info() != Eigen::Success) throw SolverError("eigendecomposition of the derivative operator failed");
    Eigen::Index top = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&top);
    const double lambda = es.eigenvalues()(top);
    lb.m0_hat = std::abs(lambda);
    lb.phi = N.inv_sqrt * es.eigenvectors().col(top);
    lb.psi = (lambda < 0.0 ? -1.0 : 1.0) * lb.phi;
    lb.derivative = lb.psi.dot(H * lb.phi);
    return lb;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double dn = static_cast<double>(n);
    const double den = dn * sxx - sx * sx;
    return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (dn * sxy - sx * sy) / den;
}

CampaignResult run_campaign(const CampaignConfig& cfg) {
    CampaignResult res;
    std::size_t index = 0;
    for (std::size_t e = 0; e < cfg.eps_ladder.size(); ++e) {
        for (int i = 0; i < cfg.samples; ++i) {
            const std::uint64_t seed = derive_seed(cfg.seed, e, static_cast<std::uint64_t>(i));
            for (double h : cfg.mesh_ladder) {
                CampaignRow row;
                row.index = index++;
                row.eps = cfg.eps_ladder[e];
                row.seed = seed;
                row.record.c1 = cfg.base;
                row.record.mesh_h = h;
                row.record.seed = seed;
                try {
                    const PiecewiseConductivity c2 = sample_admissible_pair(cfg.pi, cfg.omega, cfg.base, row.eps, seed);
                    row.record = stability_ratio(cfg.omega, cfg.base, c2, h, seed);
                    row.ok = true;
                } catch (const Error& ex) {
                    row.error = ex.what();
                    ++res.failures;
                }
                res.rows.push_back(std::move(row));
            }
        }
    }

    // delta0: configured, or half the smallest op_diff among count-mismatched pairs.
    double mismatch_min = std::numeric_limits<double>::infinity();
    for (const CampaignRow& r : res.rows)
        if (r.ok && r.record.c1.polygon.size() != r.record.c2.polygon.size())
            mismatch_min = std::min(mismatch_min, r.record.op_diff);
    if (cfg.delta0) {
        res.delta0 = *cfg.delta0;
        res.delta0_source = "config";
    } else if (std::isfinite(mismatch_min)) {
        res.delta0 = 0.5 * mismatch_min;
        res.delta0_source = "calibrated";
    } else {
        res.delta0 = std::numeric_limits<double>::infinity();
        res.delta0_source = "none";
    }

    const double finest = cfg.mesh_ladder.empty() ? 0.0 : *std::min_element(cfg.mesh_ladder.begin(), cfg.mesh_ladder.end());
    std::vector<double> xs, ys, ratios;
    for (CampaignRow& r : res.rows) {
        if (!r.ok) continue;
        r.vertex = vertex_count_recovery(r.record, res.delta0);
        const StabilityRecord& s = r.record;
        if (s.sym_diff > 0.0) res.hausdorff_C = std::max(res.hausdorff_C, s.hausdorff / std::sqrt(s.sym_diff));
        if (s.flagged || s.mesh_h != finest) continue;
        res.empirical_C = std::max(res.empirical_C, s.ratio);
        ratios.push_back(s.ratio);
        xs.push_back(s.op_diff);
        ys.push_back(s.l1_diff);
    }
    res.median_ratio = median(ratios);
    res.fit_points = xs.size();
    res.slope = loglog_slope(xs, ys);
    return res;
}

namespace {

std::string polygon_field(const Polygon& P) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (std::size_t i = 0; i < P.size(); ++i) s << (i ? ";" : "") << P.vertex(i).x << ' ' << P.vertex(i).y;
    return s.str();
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<CampaignRow>& rows) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(17);
    out << "index,eps,seed,ok,mesh_h,k1,k2,l1_diff,l2_diff,op_diff,ratio,flagged,hausdorff,sym_diff,vertex_motion,"
           "k_diff,counts_equal,claim,violated,vertex_distance_ratio,P1,P2,error\n";
    for (const CampaignRow& r : rows) {
        const StabilityRecord& s = r.record;
        out << r.index << ',' << r.eps << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << s.mesh_h << ',' << s.c1.k
            << ',' << s.c2.k << ',' << s.l1_diff << ',' << s.l2_diff << ',' << s.op_diff << ',' << s.ratio << ','
            << (s.flagged ? 1 : 0) << ',' << s.hausdorff << ',' << s.sym_diff << ',' << s.vertex_motion << ','
            << s.k_diff << ',' << (r.vertex.counts_equal ? 1 : 0) << ',' << (r.vertex.claim ? 1 : 0) << ','
            << (r.vertex.violated ? 1 : 0) << ',' << r.vertex.distance_ratio << ",\"" << polygon_field(s.c1.polygon)
            << "\",\"" << (s.c2.polygon.size() ? polygon_field(s.c2.polygon) : std::string()) << "\",\"" << r.error
            << "\"\n";
    }
    out.flags(flags);
    out.precision(prec);
}

void write_campaign_summary(std::ostream& out, const CampaignResult& result) {
    nlohmann::json j;
    j["records"] = result.rows.size();
    j["failures"] = result.failures;
    j["empirical_C"] = result.empirical_C;
    j["median_ratio"] = result.median_ratio;
    j["slope_l1_vs_op"] = finite_or_null(result.slope);
    j["fit_points"] = result.fit_points;
    j["delta0"] = finite_or_null(result.delta0);
    j["delta0_source"] = result.delta0_source;
    j["hausdorff_C"] = result.hausdorff_C;
    j["op_diff_floor"] = kOpDiffFloor;
    j["half_norm"] = kHalfNormRealization;
    out << std::setprecision(17) << j.dump(2) << '\n';
}

}  // namespace eitlab
