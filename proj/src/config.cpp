#include "eitlab/config.hpp"

#include "eitlab/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace eitlab {
namespace {

namespace pt = boost::property_tree;

double to_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": '" + s + "'");
    }
}

long long to_int(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": '" + s + "'");
    }
}

template <class T, class F>
std::vector<T> split_list(const std::string& key, const std::string& s, F convert) {
    std::vector<T> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(static_cast<T>(convert(key, tok)));
    return out;
}

std::optional<std::string> get(const pt::ptree& tree, const std::string& key) {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return *v;
    return std::nullopt;
}

Polygon read_polygon_entry(const pt::ptree& tree, const std::string& section, const std::filesystem::path& dir) {
    const auto file = get(tree, section + ".polygon");
    const auto verts = get(tree, section + ".vertices");
    if (file && verts) throw ConfigError("[" + section + "] gives both polygon and vertices");
    if (verts) {
        try {
            return Polygon(parse_point_list(*verts));
        } catch (const GeometryError& e) {
            throw ConfigError("[" + section + "] vertices: " + e.what());
        }
    }
    if (!file) throw ConfigError("[" + section + "] needs polygon or vertices");
    const std::filesystem::path p = dir / *file;
    if (!std::filesystem::exists(p)) throw ConfigError("polygon file not found: " + p.string());
    try {
        return read_polygon_file(p.string());
    } catch (const GeometryError& e) {
        throw ConfigError("polygon file " + p.string() + ": " + e.what());
    }
}

std::optional<PiecewiseConductivity> read_conductivity(const pt::ptree& tree, const std::string& section,
                                                       const std::filesystem::path& dir) {
    if (!tree.get_child_optional(section)) return std::nullopt;
    PiecewiseConductivity c;
    c.polygon = read_polygon_entry(tree, section, dir);
    const auto k = get(tree, section + ".k");
    if (!k) throw ConfigError("[" + section + "] needs k");
    c.k = to_double(section + ".k", *k);
    return c;
}

}  // namespace

std::vector<Vec2> parse_point_list(const std::string& text) {
    std::vector<Vec2> pts;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream is(item);
        Vec2 p;
        std::string extra;
        if (!(is >> p.x >> p.y) || (is >> extra)) throw ConfigError("bad point '" + item + "'");
        pts.push_back(p);
    }
    return pts;
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    static const std::map<std::string, std::vector<std::string>> known{
        {"domain", {"box", "polygon", "vertices"}},
        {"inclusion", {"polygon", "vertices", "k"}},
        {"target", {"polygon", "vertices", "k"}},
        {"prior", {"N0", "alpha0", "d0", "r0", "K0", "lambda0", "lambda1", "L"}},
        {"mesh", {"target_h", "grading", "levels"}},
        {"traces", {"modes"}},
        {"path", {"taper", "vertex_shift", "dk", "dt", "threshold"}},
        {"green", {"side", "ladder", "target_h", "growth"}},
        {"campaign", {"eps", "samples", "mesh_h", "seed", "delta0"}},
        {"output", {"dir"}},
    };
    for (const auto& [section, child] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown section [" + section + "]");
        if (child.empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& [key, value] : child)
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }

    RunConfig cfg;
    if (const auto box = get(tree, "domain.box")) {
        const auto v = split_list<double>("domain.box", *box, to_double);
        if (v.size() != 4 || !(v[0] < v[2] && v[1] < v[3])) throw ConfigError("domain.box needs xmin ymin xmax ymax");
        cfg.omega = Domain::box(v[0], v[1], v[2], v[3]);
    } else if (tree.get_child_optional("domain")) {
        cfg.omega = Domain(read_polygon_entry(tree, "domain", base_dir));
    } else {
        cfg.omega = Domain::box(-1.0, -1.0, 1.0, 1.0);
    }
    cfg.base = read_conductivity(tree, "inclusion", base_dir);
    cfg.target = read_conductivity(tree, "target", base_dir);

    if (const auto prior = tree.get_child_optional("prior")) {
        std::map<std::string, std::string> kv;
        for (const auto& [key, value] : *prior) kv[key] = value.data();
        cfg.pi = PriorInfo::from_map(kv);
    }

    if (const auto v = get(tree, "mesh.target_h")) cfg.mesh.target_h = to_double("mesh.target_h", *v);
    if (const auto v = get(tree, "mesh.grading")) cfg.mesh.grading = to_double("mesh.grading", *v);
    if (const auto v = get(tree, "mesh.levels")) cfg.mesh.levels = static_cast<int>(to_int("mesh.levels", *v));
    if (!(cfg.mesh.target_h > 0.0)) throw ConfigError("mesh.target_h must be positive");
    if (!(cfg.mesh.grading >= 1.0)) throw ConfigError("mesh.grading must be at least 1");
    if (cfg.mesh.levels < 1) throw ConfigError("mesh.levels must be at least 1");

    if (const auto v = get(tree, "traces.modes")) {
        std::istringstream in2(*v);
        cfg.traces.clear();
        for (std::string tok; in2 >> tok;) cfg.traces.push_back(tok);
        if (cfg.traces.empty()) throw ConfigError("traces.modes is empty");
    }

    cfg.path.taper = 0.5 * cfg.pi.d0;
    if (const auto v = get(tree, "path.taper")) cfg.path.taper = to_double("path.taper", *v);
    if (const auto v = get(tree, "path.vertex_shift")) cfg.path.vertex_shift = parse_point_list(*v);
    if (const auto v = get(tree, "path.dk")) cfg.path.dk = to_double("path.dk", *v);
    if (const auto v = get(tree, "path.dt")) cfg.path.dt = to_double("path.dt", *v);
    if (const auto v = get(tree, "path.threshold")) cfg.path.threshold = to_double("path.threshold", *v);
    if (!(cfg.path.taper > 0.0)) throw ConfigError("path.taper must be positive");
    if (!(cfg.path.dt > 0.0)) throw ConfigError("path.dt must be positive");
    if (!(cfg.path.threshold >= 0.0)) throw ConfigError("path.threshold must be nonnegative");

    if (const auto v = get(tree, "green.side")) {
        const long long s = to_int("green.side", *v);
        if (s < 0) throw ConfigError("green.side must be nonnegative");
        cfg.green.side = static_cast<std::size_t>(s);
    }
    if (const auto v = get(tree, "green.ladder"))
        cfg.green.ladder = split_list<int>("green.ladder", *v, to_int);
    if (const auto v = get(tree, "green.target_h")) cfg.green.target_h = to_double("green.target_h", *v);
    if (const auto v = get(tree, "green.growth"))
        cfg.green.growth = split_list<double>("green.growth", *v, to_double);

    if (const auto v = get(tree, "campaign.eps")) cfg.campaign.eps = split_list<double>("campaign.eps", *v, to_double);
    if (const auto v = get(tree, "campaign.samples")) {
        cfg.campaign.samples = static_cast<int>(to_int("campaign.samples", *v));
        if (cfg.campaign.samples < 0) throw ConfigError("campaign.samples must be nonnegative");
    }
    if (const auto v = get(tree, "campaign.mesh_h")) {
        cfg.campaign.mesh_ladder = split_list<double>("campaign.mesh_h", *v, to_double);
        if (cfg.campaign.mesh_ladder.empty()) throw ConfigError("campaign.mesh_h is empty");
    }
    if (const auto v = get(tree, "campaign.seed")) {
        const long long s = to_int("campaign.seed", *v);
        if (s < 0) throw ConfigError("campaign.seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (const auto v = get(tree, "campaign.delta0")) cfg.campaign.delta0 = to_double("campaign.delta0", *v);
    for (double e : cfg.campaign.eps)
        if (!(e >= 0.0)) throw ConfigError("campaign.eps entries must be nonnegative");

    cfg.out_dir = base_dir / get(tree, "output.dir").value_or("out");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    RunConfig cfg = parse_config(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    cfg.source = path;
    return cfg;
}

}  // namespace eitlab
