#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "specx/error.hpp"
#include "specx/glminmax.hpp"
#include "specx/index.hpp"
#include "specx/spectra.hpp"
#include "specx/version.hpp"

namespace specx::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::string sweep_kind;
    std::string surface = "sphere";
    std::string mesh_path;
    int subdiv = 4;
    std::string tau = "0,1";
    int res = 64;
    std::string density_path;
    std::string measure = "volume";
    std::string eps = "0.2,0.1,0.05";
    int n = 2;
    std::string map = "auto";
    std::string family = "first";
    std::string grid = "9";
    double mollify = 1e-3;
    std::string holes = "1";
    double radius = 0.0;
    std::string m_list;
    int k = 5;
    int iterations = 200;
    double tol = 1e-8;
    std::uint64_t seed = 1;
    std::string out = "specx_out";
};

// ---------------------------------------------------------------------------
// Parsing helpers

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(flag + ": not a number: '" + item + "'");
        }
    }
    if (v.empty()) throw UsageError(flag + ": empty list");
    return v;
}

std::vector<int> parse_ints(const std::string& text, const std::string& flag) {
    // Accepts "a,b,c" and ranges "a..b".
    std::vector<int> v;
    std::stringstream ss(text);
    std::string item;
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int x = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return x;
        } catch (const std::exception&) {
            throw UsageError(flag + ": not an integer: '" + s + "'");
        }
    };
    while (std::getline(ss, item, ',')) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            v.push_back(to_int(item));
            continue;
        }
        const int lo = to_int(item.substr(0, dots));
        const int hi = to_int(item.substr(dots + 2));
        if (hi < lo) throw UsageError(flag + ": empty range '" + item + "'");
        for (int x = lo; x <= hi; ++x) v.push_back(x);
    }
    if (v.empty()) throw UsageError(flag + ": empty list");
    return v;
}

std::complex<double> parse_tau(const std::string& text) {
    const auto v = parse_doubles(text, "--tau");
    if (v.size() != 2) throw UsageError("--tau expects re,im");
    if (!(v[1] > 0.0)) throw UsageError("--tau needs a positive imaginary part");
    return {v[0], v[1]};
}

ConformalDensity load_density(const TriMesh& mesh, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open density file " + path);
    std::vector<double> vals;
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::getline(in, tok);
            continue;
        }
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ParseError(path + ": not a number: '" + tok + "'");
        }
    }
    if (static_cast<int>(vals.size()) != mesh.num_vertices())
        throw ParseError(path + ": expected " + std::to_string(mesh.num_vertices()) + " values, found " +
                         std::to_string(vals.size()));
    return ConformalDensity(mesh, Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
}

// ---------------------------------------------------------------------------
// JSON helpers

ordered_json to_json(const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

// inf and nan are not JSON numbers.
ordered_json num(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

ordered_json config_json(const RunConfig& c) {
    ordered_json j;
    j["command"] = c.command;
    if (!c.sweep_kind.empty()) j["sweep"] = c.sweep_kind;
    j["surface"] = c.surface;
    if (c.surface == "sphere") j["subdiv"] = c.subdiv;
    if (c.surface == "torus") {
        j["tau"] = c.tau;
        j["res"] = c.res;
    }
    if (c.surface == "file") j["mesh"] = c.mesh_path;
    if (!c.density_path.empty()) j["density"] = c.density_path;
    j["measure"] = c.measure;
    j["eps"] = parse_doubles(c.eps, "--eps");
    j["n"] = c.n;
    j["map"] = c.map;
    j["family"] = c.family;
    j["grid"] = parse_ints(c.grid, "--grid");
    j["mollify"] = c.mollify;
    j["holes"] = parse_ints(c.holes, "--holes");
    j["radius"] = c.radius;
    if (!c.m_list.empty()) j["m"] = parse_ints(c.m_list, "--m");
    j["k"] = c.k;
    j["iterations"] = c.iterations;
    j["tol"] = c.tol;
    j["seed"] = c.seed;
    j["out"] = c.out;
    return j;
}

ordered_json mesh_json(const TriMesh& m) {
    ordered_json j;
    j["vertices"] = m.num_vertices();
    j["triangles"] = m.num_triangles();
    j["euler_characteristic"] = m.euler_characteristic();
    j["boundary_loops"] = m.boundary_loops().size();
    j["area"] = area(m);
    j["mean_edge_length"] = mean_edge_length(m);
    return j;
}

ordered_json spectrum_json(const Spectrum& s) {
    ordered_json j;
    j["values"] = to_json(s.values);
    j["normalized"] = to_json(s.normalized());
    j["residuals"] = to_json(s.residuals);
    j["mass"] = s.mass;
    j["cluster_tol"] = s.cluster_tol;
    if (s.size() > 1) j["multiplicity_1"] = cluster_size(s, 1);
    j["warnings"] = s.warnings;
    return j;
}

// ---------------------------------------------------------------------------
// Output

class Output {
public:
    Output(const RunConfig& c, std::ostream& out) : config_(c), out_(out) {
        dir_ = c.out;
        if (const char* env = std::getenv("SPECX_OUT"); env && *env) dir_ = env;
        fs::create_directories(dir_);
    }

    const fs::path& dir() const { return dir_; }

    void write_json(const std::string& name, ordered_json result, const TriMesh* mesh) {
        ordered_json doc;
        doc["version"] = version;
        doc["config"] = config_json(config_);
        doc["config"]["out"] = dir_.string();
        if (mesh) doc["mesh"] = mesh_json(*mesh);
        doc["result"] = std::move(result);
        const fs::path path = dir_ / (name + ".json");
        std::ofstream f(path);
        f << doc.dump(2) << '\n';
        if (!f) throw std::runtime_error("failed writing " + path.string());
        out_ << "wrote " << path.string() << '\n';
    }

    void ledger(const std::string& metric, double value, int vertices) {
        const fs::path path = dir_ / "ledger.csv";
        const bool fresh = !fs::exists(path);
        std::ostringstream row;
        if (fresh) row << "version,command,surface,vertices,seed,metric,value\n";
        std::string command = config_.command;
        if (!config_.sweep_kind.empty()) command += ":" + config_.sweep_kind;
        row << version << ',' << command << ',' << config_.surface << ',' << vertices << ',' << config_.seed << ','
            << metric << ',' << std::setprecision(17) << value << '\n';
        std::ofstream f(path, std::ios::app);
        f << row.str();
        f.flush();
        if (!f) throw std::runtime_error("failed appending to " + path.string());
    }

    void headline(const std::string& what, double value) {
        out_ << what << " = " << std::setprecision(10) << value << '\n';
    }

private:
    const RunConfig& config_;
    std::ostream& out_;
    fs::path dir_;
};

// ---------------------------------------------------------------------------
// Inputs shared by the commands

TriMesh build_mesh(const RunConfig& c) {
    if (c.surface == "sphere") return build_sphere_mesh(c.subdiv);
    if (c.surface == "torus") return build_torus_mesh(parse_tau(c.tau), c.res);
    return load_mesh(c.mesh_path);
}

SolverOptions solver_options(const RunConfig& c) {
    SolverOptions so;
    so.tol = c.tol;
    so.seed = c.seed;
    return so;
}

SphereMap base_map(const RunConfig& c, const TriMesh& mesh) {
    std::string name = c.map;
    if (name == "auto") {
        if (c.surface == "torus") name = c.n >= 3 ? "clifford" : "elliptic";
        else if (c.surface == "sphere") name = "identity";
        else throw UsageError("--map is required for a mesh file");
    }
    SphereMap phi;
    if (name == "identity") phi = identity_map(mesh);
    else if (name == "z2") phi = power_map(mesh, 2);
    else if (name == "clifford") phi = clifford_map(mesh);
    else if (name == "elliptic") phi = elliptic_map(mesh);
    else throw UsageError("unknown map '" + name + "'");
    if (phi.ambient_dim() > c.n + 1)
        throw UsageError("map '" + name + "' needs --n >= " + std::to_string(phi.ambient_dim() - 1));
    return phi.ambient_dim() < c.n + 1 ? phi.included(c.n + 1) : phi;
}

FamilySpec family_spec(const RunConfig& c, const TriMesh& mesh, int grid) {
    FamilySpec spec;
    spec.base_map = base_map(c, mesh);
    if (c.family == "first") spec.kind = FamilyKind::first;
    else if (c.family == "second") spec.kind = FamilyKind::second;
    else throw UsageError("--family must be first or second");
    spec.mollify_time = c.mollify;
    spec.grid.points_per_axis = grid;
    spec.seed = c.seed;
    return spec;
}

double hole_radius(const RunConfig& c, const TriMesh& mesh) {
    return c.radius > 0.0 ? c.radius : 3.0 * mean_edge_length(mesh);
}

ordered_json minmax_json(const MinMaxReport& r, double lambda1, double area_total) {
    ordered_json j;
    j["eps"] = r.eps;
    j["mollify_time"] = r.mollify_time;
    j["sup_energy"] = r.sup_energy;
    j["argmax"] = to_json(r.argmax);
    j["evaluations"] = r.evaluations;
    j["rounds"] = r.rounds;
    if (r.balanced) {
        j["balanced"] = {{"parameter", to_json(r.balanced->parameter)},
                         {"residual", r.balanced->residual},
                         {"starts", r.balanced->starts}};
        j["rayleigh"] = r.rayleigh;
    }
    j["eigenvalue_bound"] = num(r.eigenvalue_bound);
    if (r.critical) {
        j["critical"] = {{"energy", r.critical->energy},
                         {"gradient_norm", r.critical->gradient_norm},
                         {"converged", r.critical->converged},
                         {"tension", num(r.critical->tension)}};
    }
    // 2 sup >= (A - 2 eps sqrt(A sup)) lambda_1, the area-general form of the sandwich.
    const double rhs = (area_total - 2.0 * r.eps * std::sqrt(area_total * r.sup_energy)) * lambda1;
    j["sandwich"] = {{"lambda1", lambda1},
                     {"lhs", 2.0 * r.sup_energy},
                     {"rhs", rhs},
                     {"slack", 2.0 * r.sup_energy - rhs},
                     {"holds", 2.0 * r.sup_energy >= rhs}};
    return j;
}

double kendall_tau(const std::vector<double>& y) {
    double concordant = 0.0, discordant = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = i + 1; j < y.size(); ++j) {
            if (y[j] > y[i]) concordant += 1.0;
            else if (y[j] < y[i]) discordant += 1.0;
        }
    const double pairs = 0.5 * static_cast<double>(y.size()) * static_cast<double>(y.size() - 1);
    return pairs > 0.0 ? (concordant - discordant) / pairs : 0.0;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_eigs(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    const SolverOptions so = solver_options(c);
    Spectrum s;
    ordered_json r;
    if (c.measure == "boundary") {
        if (!c.density_path.empty()) throw UsageError("--density conflicts with --measure boundary");
        s = measure_eigs(mesh, boundary_measure(mesh), c.k, so);
        r["problem"] = "measure:boundary";
    } else if (c.measure == "volume") {
        const ConformalDensity f =
            c.density_path.empty() ? ConformalDensity::constant(mesh) : load_density(mesh, c.density_path);
        s = laplace_eigs(mesh, f, c.k, so);
        r["problem"] = c.density_path.empty() ? "laplace" : "laplace:density";
    } else {
        throw UsageError("--measure must be volume or boundary");
    }
    r["spectrum"] = spectrum_json(s);
    out.write_json("eigs", r, &mesh);
    if (s.size() > 1) {
        out.headline("lambda_bar_1", s.normalized()[1]);
        out.ledger("lambda_bar_1", s.normalized()[1], mesh.num_vertices());
    }
    return 0;
}

int cmd_maximize(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    MaximizerOptions opt;
    opt.iterations = c.iterations;
    opt.solver = solver_options(c);
    if (!c.density_path.empty()) opt.initial = load_density(mesh, c.density_path);
    const MaximizerReport rep = maximize_lambda1_conformal(mesh, opt);
    ordered_json r;
    r["lambda_bar"] = rep.lambda_bar;
    r["iterations"] = rep.iterations;
    r["converged"] = rep.converged;
    r["stationarity_gap"] = rep.stationarity_gap;
    r["density_change_l2"] = rep.density_change_l2;
    r["density_change_weak"] = rep.density_change_weak;
    r["measure_rank"] = rep.measure_rank;
    r["multiplicity"] = rep.multiplicity;
    r["history"] = rep.history;
    const fs::path dens = out.dir() / "maximize-density.txt";
    {
        std::ofstream f(dens);
        f << std::setprecision(17);
        for (int i = 0; i < rep.density.size(); ++i) f << rep.density[i] << '\n';
    }
    r["density_file"] = dens.filename().string();
    out.write_json("maximize", r, &mesh);
    out.headline("lambda_bar", rep.lambda_bar);
    out.ledger("lambda_bar", rep.lambda_bar, mesh.num_vertices());
    return rep.converged ? 0 : 1;
}

int cmd_glminmax(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    const auto eps = parse_doubles(c.eps, "--eps");
    const FamilySpec spec = family_spec(c, mesh, parse_ints(c.grid, "--grid").front());
    DescentOptions d;
    d.seed = c.seed;
    const auto sched = eps_schedule(mesh, spec, eps, d);
    const double lambda1 = laplace_eigs(mesh, 1, solver_options(c)).values[1];
    ordered_json r;
    r["family"] = c.family;
    r["base_map_dim"] = spec.base_map.ambient_dim();
    r["area"] = area(mesh);
    r["schedule"] = ordered_json::array();
    bool holds = true;
    for (const auto& e : sched) {
        r["schedule"].push_back(minmax_json(e.report, lambda1, area(mesh)));
        holds = holds && r["schedule"].back()["sandwich"]["holds"].get<bool>();
    }
    out.write_json("glminmax", r, &mesh);
    for (const auto& e : sched) {
        out.headline("sup_energy(eps=" + std::to_string(e.eps) + ")", e.sup_energy);
        out.ledger("sup_energy@eps=" + std::to_string(e.eps), e.sup_energy, mesh.num_vertices());
    }
    return holds ? 0 : 1;
}

int cmd_vc(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    const SphereMap phi = base_map(c, mesh);
    BallSearchOptions opt;
    opt.points_per_axis = parse_ints(c.grid, "--grid").front();
    const ConformalVolumeReport rep = conformal_volume(mesh, phi, opt);
    ordered_json r;
    r["energy"] = energy(mesh, phi);
    r["estimate"] = rep.estimate;
    r["argmax"] = to_json(rep.argmax);
    r["evaluations"] = rep.evaluations;
    r["rounds"] = rep.rounds;
    r["hopf_defect"] = rep.hopf_defect;
    out.write_json("vc", r, &mesh);
    out.headline("conformal_volume", rep.estimate);
    out.ledger("conformal_volume", rep.estimate, mesh.num_vertices());
    return 0;
}

struct SteklovRow {
    int holes = 0;
    double sigma_bar = 0.0;
    double length = 0.0;
};

SteklovRow steklov_row(const TriMesh& ambient, const std::vector<int>& centers, double radius, const RunConfig& c) {
    const TriMesh omega = centers.empty() ? ambient : puncture(ambient, centers, radius);
    if (!omega.has_boundary()) throw UsageError("Steklov problem needs a boundary: pass --holes >= 1");
    const Spectrum s = steklov_eigs(omega, 1, solver_options(c));
    return {static_cast<int>(centers.size()), normalized_steklov(s.values[1], omega), boundary_length(omega)};
}

int cmd_steklov(const RunConfig& c, Output& out) {
    const TriMesh ambient = build_mesh(c);
    const int holes = parse_ints(c.holes, "--holes").back();
    const double radius = hole_radius(c, ambient);
    const auto centers = spread_centers(ambient, holes);
    const TriMesh omega = holes == 0 ? ambient : puncture(ambient, centers, radius);
    if (!omega.has_boundary()) throw UsageError("Steklov problem needs a boundary: pass --holes >= 1");
    const Spectrum s = steklov_eigs(omega, c.k, solver_options(c));
    ordered_json r;
    r["holes"] = holes;
    r["radius"] = radius;
    r["centers"] = centers;
    r["boundary_length"] = boundary_length(omega);
    r["spectrum"] = spectrum_json(s);
    const double sigma_bar = normalized_steklov(s.values[1], omega);
    r["sigma_bar_1"] = sigma_bar;
    if (!ambient.has_boundary()) {
        MaximizerOptions mo;
        mo.iterations = c.iterations;
        mo.solver = solver_options(c);
        const double ref = maximize_lambda1_conformal(ambient, mo).lambda_bar;
        r["lambda_bar_reference"] = ref;
        r["strict_inequality"] = sigma_bar < ref;
    }
    out.write_json("steklov", r, &omega);
    out.headline("sigma_bar_1", sigma_bar);
    out.ledger("sigma_bar_1", sigma_bar, omega.num_vertices());
    return 0;
}

int cmd_index(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    const SphereMap phi = base_map(c, mesh);
    IndexOptions opt;
    opt.solver = solver_options(c);
    const IndexReport rep = index_report(mesh, phi, opt);
    ordered_json r;
    r["ind_S"] = rep.spectral.ind_S;
    r["nul_S"] = rep.spectral.nul_S;
    r["ind_E"] = rep.energy.ind_E;
    r["margins"] = {num(rep.spectral.margins[0]), num(rep.spectral.margins[1])};
    r["normalization"] = IndexReport::normalization;
    r["spectral_stable"] = rep.spectral.stable;
    r["spectral_values"] = to_json(rep.spectral.values);
    r["energy"] = {{"threshold", rep.energy.threshold},
                   {"norm", rep.energy.norm},
                   {"margin", num(rep.energy.margin)},
                   {"dimension", rep.energy.dimension},
                   {"lowest", to_json(rep.energy.values.head(std::min<Eigen::Index>(8, rep.energy.values.size())))}};
    r["tension"] = rep.tension;
    r["warnings"] = rep.warnings;
    const double e = energy(mesh, phi);
    r["dirichlet_energy"] = e;
    if (rep.spectral.ind_S < rep.spectral.values.size())
        r["lambda_bar_at_ind_S"] = 2.0 * rep.spectral.values[rep.spectral.ind_S] * e;
    const EigenvalueTwoReport two = check_eigenvalue_two(mesh, phi, opt.solver);
    r["eigenvalue_two"] = {{"present", two.present}, {"multiplicity", two.multiplicity}, {"gap", num(two.gap)}};

    std::vector<int> ms;
    if (c.m_list.empty()) {
        for (int m = c.n + 1; m <= c.n + 3; ++m) ms.push_back(m);
    } else {
        ms = parse_ints(c.m_list, "--m");
    }
    r["composition"] = ordered_json::array();
    for (int m : ms) {
        const CompositionLaw law = check_composition_law(mesh, phi, m, opt);
        r["composition"].push_back({{"m", m}, {"lhs", law.lhs}, {"rhs", law.rhs}, {"equal", law.equal}});
    }
    out.write_json("index", r, &mesh);
    out.headline("ind_S", rep.spectral.ind_S);
    out.headline("nul_S", rep.spectral.nul_S);
    out.headline("ind_E", rep.energy.ind_E);
    out.ledger("ind_E", rep.energy.ind_E, mesh.num_vertices());
    return 0;
}

int sweep_steklov_holes(const RunConfig& c, Output& out) {
    const TriMesh ambient = build_mesh(c);
    if (ambient.has_boundary()) throw UsageError("hole sweep needs a closed surface");
    const auto counts = parse_ints(c.holes, "--holes");
    const double radius = hole_radius(c, ambient);
    MaximizerOptions mo;
    mo.iterations = c.iterations;
    mo.solver = solver_options(c);
    const double ref = maximize_lambda1_conformal(ambient, mo).lambda_bar;
    const auto all = spread_centers(ambient, *std::max_element(counts.begin(), counts.end()));

    std::ostringstream csv;
    csv << "holes,sigma_bar_1,lambda_bar_reference,fraction\n" << std::setprecision(17);
    ordered_json rows = ordered_json::array();
    std::vector<double> values;
    for (int n : counts) {
        const std::vector<int> centers(all.begin(), all.begin() + n);
        const SteklovRow row = steklov_row(ambient, centers, radius, c);
        values.push_back(row.sigma_bar);
        csv << n << ',' << row.sigma_bar << ',' << ref << ',' << row.sigma_bar / ref << '\n';
        rows.push_back({{"holes", n}, {"sigma_bar_1", row.sigma_bar}, {"boundary_length", row.length},
                        {"fraction", row.sigma_bar / ref}});
        out.ledger("sigma_bar_1@holes=" + std::to_string(n), row.sigma_bar, ambient.num_vertices());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < values.size(); ++i) monotone = monotone && values[i] >= values[i - 1];
    const double tau = kendall_tau(values);

    ordered_json r;
    r["radius"] = radius;
    r["lambda_bar_reference"] = ref;
    r["rows"] = rows;
    r["nondecreasing"] = monotone;
    r["kendall_tau"] = tau;
    r["all_below_reference"] =
        std::all_of(values.begin(), values.end(), [&](double v) { return v < ref; });
    r["final_fraction"] = values.back() / ref;
    const fs::path path = out.dir() / "sweep-steklov-holes.csv";
    std::ofstream(path) << csv.str();
    out.write_json("sweep-steklov-holes", r, &ambient);
    out.headline("final fraction of reference", values.back() / ref);
    out.headline("kendall tau", tau);
    return 0;
}

int sweep_eps(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    const FamilySpec spec = family_spec(c, mesh, parse_ints(c.grid, "--grid").front());
    DescentOptions d;
    d.seed = c.seed;
    const auto sched = eps_schedule(mesh, spec, parse_doubles(c.eps, "--eps"), d);
    const double lambda1 = laplace_eigs(mesh, 1, solver_options(c)).values[1];
    std::ostringstream csv;
    csv << "eps,sup_energy,critical_energy,sandwich_slack\n" << std::setprecision(17);
    ordered_json rows = ordered_json::array();
    for (const auto& e : sched) {
        const ordered_json j = minmax_json(e.report, lambda1, area(mesh));
        csv << e.eps << ',' << e.sup_energy << ',' << e.critical.energy << ','
            << j["sandwich"]["slack"].get<double>() << '\n';
        rows.push_back(j);
        out.ledger("sup_energy@eps=" + std::to_string(e.eps), e.sup_energy, mesh.num_vertices());
    }
    std::ofstream(out.dir() / "sweep-eps.csv") << csv.str();
    out.write_json("sweep-eps", {{"rows", rows}}, &mesh);
    return 0;
}

int sweep_grid(const RunConfig& c, Output& out) {
    const TriMesh mesh = build_mesh(c);
    const double eps = parse_doubles(c.eps, "--eps").front();
    std::ostringstream csv;
    csv << "grid,sup_energy,evaluations\n" << std::setprecision(17);
    ordered_json rows = ordered_json::array();
    for (int g : parse_ints(c.grid, "--grid")) {
        FamilySpec spec = family_spec(c, mesh, g);
        spec.eps = eps;
        const MinMaxReport rep = minmax_upper(Family(mesh, spec));
        csv << g << ',' << rep.sup_energy << ',' << rep.evaluations << '\n';
        rows.push_back({{"grid", g}, {"sup_energy", rep.sup_energy}, {"evaluations", rep.evaluations}});
        out.ledger("sup_energy@grid=" + std::to_string(g), rep.sup_energy, mesh.num_vertices());
    }
    std::ofstream(out.dir() / "sweep-grid.csv") << csv.str();
    out.write_json("sweep-grid", {{"eps", eps}, {"rows", rows}}, &mesh);
    return 0;
}

int cmd_sweep(const RunConfig& c, Output& out) {
    if (c.sweep_kind == "steklov-holes") return sweep_steklov_holes(c, out);
    if (c.sweep_kind == "eps") return sweep_eps(c, out);
    if (c.sweep_kind == "grid") return sweep_grid(c, out);
    throw UsageError("unknown sweep '" + c.sweep_kind + "' (steklov-holes, eps, grid)");
}

// ---------------------------------------------------------------------------
// Validation

void validate(const RunConfig& c, const CLI::App& app) {
    auto given = [&](const char* flag) { return app.count(flag) > 0; };
    if (c.surface == "sphere") {
        if (given("--tau") || given("--res") || given("--mesh"))
            throw UsageError("--surface sphere conflicts with --tau/--res/--mesh");
    } else if (c.surface == "torus") {
        if (given("--subdiv") || given("--mesh"))
            throw UsageError("--surface torus conflicts with --subdiv/--mesh");
    } else if (c.surface == "file") {
        if (c.mesh_path.empty()) throw UsageError("--surface file needs --mesh");
        if (given("--subdiv") || given("--tau") || given("--res"))
            throw UsageError("--surface file conflicts with --subdiv/--tau/--res");
    }
    if (c.subdiv < 0 || c.subdiv > 8) throw UsageError("--subdiv must lie in [0, 8]");
    if (c.res < 3) throw UsageError("--res must be at least 3");
    if (c.k < 1) throw UsageError("-k must be positive");
    if (c.n < 1) throw UsageError("--n must be positive");
    if (c.iterations < 0) throw UsageError("--iterations must be nonnegative");
    if (!(c.tol > 0.0)) throw UsageError("--tol must be positive");
    if (!(c.mollify > 0.0)) throw UsageError("--mollify must be positive");
    if (c.radius < 0.0) throw UsageError("--radius must be nonnegative");
    for (double e : parse_doubles(c.eps, "--eps"))
        if (!(e > 0.0)) throw UsageError("--eps values must be positive");
    for (int g : parse_ints(c.grid, "--grid"))
        if (g < 1) throw UsageError("--grid values must be positive");
    for (int h : parse_ints(c.holes, "--holes"))
        if (h < 0) throw UsageError("--holes values must be nonnegative");
    if (c.surface == "torus") parse_tau(c.tau);
    if (!c.m_list.empty()) parse_ints(c.m_list, "--m");
    if (c.command == "steklov" && !c.density_path.empty()) throw UsageError("--density has no effect on steklov");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Spectral and harmonic-map experiments on triangle meshes", "specx"};
    app.set_version_flag("--version", std::string(version));
    app.set_config("--config", "", "key=value configuration file; flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--surface", c.surface, "sphere, torus or file")
        ->check(CLI::IsMember({"sphere", "torus", "file"}));
    app.add_option("--mesh", c.mesh_path, "OFF mesh for --surface file");
    app.add_option("--subdiv", c.subdiv, "icosphere subdivision level");
    app.add_option("--tau", c.tau, "torus lattice parameter re,im");
    app.add_option("--res", c.res, "torus grid resolution");
    app.add_option("--density", c.density_path, "conformal density file, one value per vertex");
    app.add_option("--measure", c.measure, "eigs: volume or boundary");
    app.add_option("--eps", c.eps, "comma-separated eps schedule");
    app.add_option("--n", c.n, "target sphere dimension");
    app.add_option("--map", c.map, "auto, identity, z2, clifford or elliptic");
    app.add_option("--family", c.family, "first or second");
    app.add_option("--grid", c.grid, "grid points per axis (list for sweep grid)");
    app.add_option("--mollify", c.mollify, "heat mollification time");
    app.add_option("--holes", c.holes, "hole count, list or range a..b");
    app.add_option("--radius", c.radius, "hole radius (0: three mean edge lengths)");
    app.add_option("--m", c.m_list, "index: target dimensions for the composition law");
    app.add_option("-k", c.k, "number of nonzero eigenvalues");
    app.add_option("--iterations", c.iterations, "maximizer iterations");
    app.add_option("--tol", c.tol, "eigensolver tolerance");
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--out", c.out, "output directory (SPECX_OUT overrides)");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"eigs", "Laplace or measure eigenvalues"},
        {"maximize", "maximize lambda_1 * area over the conformal class"},
        {"glminmax", "Ginzburg-Landau min-max energies over an eps schedule"},
        {"vc", "conformal volume of a map"},
        {"steklov", "Steklov eigenvalues of a punctured surface"},
        {"index", "spectral and energy index of a harmonic map"},
        {"sweep", "parameter sweeps: steklov-holes, eps, grid"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        if (name == "sweep") sub->add_option("kind", c.sweep_kind, "steklov-holes, eps or grid")->required();
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    c.command = app.get_subcommands().front()->get_name();

    try {
        validate(c, app);
        Output output(c, out);
        if (c.command == "eigs") return cmd_eigs(c, output);
        if (c.command == "maximize") return cmd_maximize(c, output);
        if (c.command == "glminmax") return cmd_glminmax(c, output);
        if (c.command == "vc") return cmd_vc(c, output);
        if (c.command == "steklov") return cmd_steklov(c, output);
        if (c.command == "index") return cmd_index(c, output);
        return cmd_sweep(c, output);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace specx::cli
