#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levelcurv/domain.hpp"
#include "levelcurv/errors.hpp"
#include "levelcurv/operators.hpp"
#include "levelcurv/solver.hpp"

namespace levelcurv {

// Scenario configuration read from an INI-style file:
//
//   [domain]   outer, inner          e.g. outer = "ball 0 0 2"
//   [grid]     resolution
//   [operator] kind, matrix, beta
//   [solve]    t_end, cfl_factor, snapshot_every, steady_tol, initial
//   [analyze]  levels, level_count, rank_tol, gradient_floor, corner_exclusion,
//              min_samples, defect_tol, psd_tol, structure_samples,
//              structure_directions
//   [bound]    level_lo, level_hi, a_max, fit_tol, eq_tol, eta_grid,
//              degeneracy_a, simultaneity
//   [output]   dir
//
// Comments start with '#' or ';'. Values may be double-quoted. Lists are
// separated by spaces or commas.
struct Config {
    std::filesystem::path source;
    std::filesystem::path base_dir;
    int dim = 2;

    std::string outer;
    std::string inner;
    int resolution = 64;

    std::string op_kind = "heat";
    std::vector<double> matrix;
    double beta = 0.0;

    double t_end = 1.0;
    double cfl_factor = 0.9;
    double snapshot_every = 0.0;
    double steady_tol = 1e-8;
    std::string initial = "gauge";

    std::vector<double> levels;
    int level_count = 25;
    double rank_tol = 1e-3;
    double gradient_floor = 1e-8;
    double corner_exclusion = 3.0;
    int min_samples = 64;
    double defect_tol = 5.0;
    double psd_tol = 1e-3;
    int structure_samples = 32;
    int structure_directions = 64;

    double level_lo = 0.02;
    double level_hi = 0.98;
    double a_max = 10.0;
    double fit_tol = 1e-9;
    double eq_tol = 0.03;
    std::vector<double> eta_grid;
    std::optional<double> degeneracy_a;
    double simultaneity = 0.02;

    std::string out_dir = "out";

    std::map<std::string, int> lines;  // "section.key" -> line number

    std::vector<double> analysis_levels() const
    {
        if (!levels.empty())
            return levels;
        std::vector<double> c;
        for (int k = 0; k < level_count; ++k)
            c.push_back(level_count == 1 ? level_lo : level_lo + (level_hi - level_lo) * k / (level_count - 1));
        return c;
    }

    std::filesystem::path resolve(const std::string& p) const
    {
        const std::filesystem::path q(p);
        return q.is_absolute() ? q : base_dir / q;
    }

    std::string where(const std::string& key) const
    {
        const auto it = lines.find(key);
        return source.filename().string() + (it == lines.end() ? "" : ":" + std::to_string(it->second));
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_tokens(const std::string& s)
{
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<std::string> out;
    for (std::string w; is >> w;)
        out.push_back(w);
    return out;
}

inline double to_number(const std::string& tok, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v))
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + tok + "'");
    }
}

inline std::vector<double> to_numbers(const std::string& s, const std::string& where)
{
    std::vector<double> v;
    for (const auto& t : split_tokens(s))
        v.push_back(to_number(t, where));
    return v;
}

inline int to_int(const std::string& s, const std::string& where)
{
    const double v = to_number(s, where);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ConfigError(where + ": expected an integer, got '" + s + "'");
    return static_cast<int>(v);
}

// Dimension implied by a body description.
inline int body_dim(const std::string& spec, const std::string& where)
{
    const auto tok = split_tokens(spec);
    if (tok.empty())
        throw ConfigError(where + ": empty body description");
    const std::string kind = lower(tok[0]);
    const std::size_t n = tok.size() - 1;
    if (kind == "ball" && (n == 3 || n == 4))
        return n == 3 ? 2 : 3;
    if (kind == "ellipse" && n == 4)
        return 2;
    if (kind == "ellipsoid" && n == 6)
        return 3;
    if (kind == "polygon" && n >= 6 && n % 2 == 0)
        return 2;
    throw ConfigError(where + ": cannot parse body '" + spec
                      + "' (ball cx cy [cz] r | ellipse cx cy a b | ellipsoid cx cy cz a b c | polygon x1 y1 ...)");
}

} // namespace detail

template <int Dim>
ConvexBody<Dim> parse_body(const std::string& spec, const std::string& where)
{
    if (detail::body_dim(spec, where) != Dim)
        throw ConfigError(where + ": body '" + spec + "' is not " + std::to_string(Dim) + "D");
    auto tok = detail::split_tokens(spec);
    const std::string kind = detail::lower(tok[0]);
    std::vector<double> v;
    for (std::size_t i = 1; i < tok.size(); ++i)
        v.push_back(detail::to_number(tok[i], where));
    Vec<Dim> c;
    for (int a = 0; a < Dim; ++a)
        c[a] = v[static_cast<std::size_t>(a)];
    try {
        if (kind == "ball")
            return ConvexBody<Dim>::ball(c, v[Dim]);
        if (kind == "ellipse" || kind == "ellipsoid") {
            Vec<Dim> ax;
            for (int a = 0; a < Dim; ++a)
                ax[a] = v[static_cast<std::size_t>(Dim + a)];
            return ConvexBody<Dim>::ellipsoid(c, ax);
        }
        if constexpr (Dim == 2) {
            std::vector<Vec<2>> pts;
            for (std::size_t i = 0; i + 1 < v.size(); i += 2)
                pts.emplace_back(v[i], v[i + 1]);
            return ConvexBody<2>::polygon(pts);
        }
    } catch (const ArgError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": unsupported body kind '" + kind + "'");
}

inline Config parse_config(std::istream& is, const std::filesystem::path& source = "config")
{
    Config cfg;
    cfg.source = source;
    cfg.base_dir = source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");
    const std::string name = source.filename().string();
    std::string section;
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string where = name + ":" + std::to_string(lineno);
        std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": malformed section header");
            section = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
            static const std::vector<std::string> known = {"domain", "grid",  "operator", "solve",
                                                           "analyze", "bound", "output"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value");
        if (section.empty())
            throw ConfigError(where + ": key outside of a section");
        const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"') {
            const auto close = value.find('"', 1);
            if (close == std::string::npos)
                throw ConfigError(where + ": unterminated string");
            const std::string rest = detail::trim(value.substr(close + 1));
            if (!rest.empty() && rest[0] != '#' && rest[0] != ';')
                throw ConfigError(where + ": trailing text after string");
            value = value.substr(1, close - 1);
        } else {
            const auto hash = value.find_first_of("#;");
            if (hash != std::string::npos)
                value = detail::trim(value.substr(0, hash));
        }
        const std::string full = section + "." + key;
        if (cfg.lines.count(full))
            throw ConfigError(where + ": duplicate key " + full);
        cfg.lines[full] = lineno;

        auto num = [&] { return detail::to_number(value, where); };
        auto integer = [&] { return detail::to_int(value, where); };
        auto list = [&] { return detail::to_numbers(value, where); };

        if (full == "domain.outer")
            cfg.outer = value;
        else if (full == "domain.inner")
            cfg.inner = value;
        else if (full == "grid.resolution")
            cfg.resolution = integer();
        else if (full == "operator.kind")
            cfg.op_kind = detail::lower(value);
        else if (full == "operator.matrix")
            cfg.matrix = list();
        else if (full == "operator.beta")
            cfg.beta = num();
        else if (full == "solve.t_end")
            cfg.t_end = num();
        else if (full == "solve.cfl_factor")
            cfg.cfl_factor = num();
        else if (full == "solve.snapshot_every")
            cfg.snapshot_every = num();
        else if (full == "solve.steady_tol")
            cfg.steady_tol = num();
        else if (full == "solve.initial")
            cfg.initial = detail::lower(value);
        else if (full == "analyze.levels")
            cfg.levels = list();
        else if (full == "analyze.level_count")
            cfg.level_count = integer();
        else if (full == "analyze.rank_tol")
            cfg.rank_tol = num();
        else if (full == "analyze.gradient_floor")
            cfg.gradient_floor = num();
        else if (full == "analyze.corner_exclusion")
            cfg.corner_exclusion = num();
        else if (full == "analyze.min_samples")
            cfg.min_samples = integer();
        else if (full == "analyze.defect_tol")
            cfg.defect_tol = num();
        else if (full == "analyze.psd_tol")
            cfg.psd_tol = num();
        else if (full == "analyze.structure_samples")
            cfg.structure_samples = integer();
        else if (full == "analyze.structure_directions")
            cfg.structure_directions = integer();
        else if (full == "bound.level_lo")
            cfg.level_lo = num();
        else if (full == "bound.level_hi")
            cfg.level_hi = num();
        else if (full == "bound.a_max")
            cfg.a_max = num();
        else if (full == "bound.fit_tol")
            cfg.fit_tol = num();
        else if (full == "bound.eq_tol")
            cfg.eq_tol = num();
        else if (full == "bound.eta_grid")
            cfg.eta_grid = list();
        else if (full == "bound.degeneracy_a")
            cfg.degeneracy_a = num();
        else if (full == "bound.simultaneity")
            cfg.simultaneity = num();
        else if (full == "output.dir")
            cfg.out_dir = value;
        else
            throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    }

    auto need = [&](bool ok, const std::string& key, const std::string& msg) {
        if (!ok)
            throw ConfigError(cfg.where(key) + ": " + msg);
    };
    const std::vector<std::string> kinds = {"heat", "linear", "grad_augmented"};
    need(std::find(kinds.begin(), kinds.end(), cfg.op_kind) != kinds.end(), "operator.kind",
         "unknown operator kind '" + cfg.op_kind + "' (heat | linear | grad_augmented)");
    const std::vector<std::string> inits = {"radial", "gauge", "presolve"};
    need(std::find(inits.begin(), inits.end(), cfg.initial) != inits.end(), "solve.initial",
         "unknown initial data '" + cfg.initial + "' (radial | gauge | presolve)");
    need(!cfg.outer.empty(), "domain.outer", "[domain] outer is required");
    const int d_out = detail::body_dim(cfg.outer, cfg.where("domain.outer"));
    need(!cfg.inner.empty(), "domain.inner", "[domain] inner is required");
    const int d_in = detail::body_dim(cfg.inner, cfg.where("domain.inner"));
    need(d_out == d_in, "domain.inner", "outer and inner bodies have different dimensions");
    cfg.dim = d_out;
    need(cfg.resolution >= 8, "grid.resolution", "resolution must be at least 8");
    need(cfg.op_kind == "heat" || cfg.matrix.size() == static_cast<std::size_t>(cfg.dim * cfg.dim), "operator.matrix",
         "matrix needs " + std::to_string(cfg.dim * cfg.dim) + " entries");
    need(cfg.t_end >= 0.0, "solve.t_end", "t_end must be nonnegative");
    need(cfg.cfl_factor > 0.0 && cfg.cfl_factor <= 1.0, "solve.cfl_factor", "cfl_factor must lie in (0, 1]");
    need(cfg.steady_tol > 0.0, "solve.steady_tol", "steady_tol must be positive");
    need(cfg.level_count >= 1, "analyze.level_count", "level_count must be positive");
    need(cfg.rank_tol > 0.0, "analyze.rank_tol", "rank_tol must be positive");
    need(cfg.min_samples >= 1, "analyze.min_samples", "min_samples must be positive");
    need(cfg.structure_samples >= 1, "analyze.structure_samples", "structure_samples must be positive");
    need(cfg.structure_directions >= 1, "analyze.structure_directions", "structure_directions must be positive");
    need(cfg.level_lo < cfg.level_hi, "bound.level_hi", "level_lo must be below level_hi");
    need(cfg.a_max > 0.0, "bound.a_max", "a_max must be positive");
    need(cfg.fit_tol >= 0.0, "bound.fit_tol", "fit_tol must be nonnegative");
    need(cfg.eq_tol >= 0.0, "bound.eq_tol", "eq_tol must be nonnegative");
    for (std::size_t k = 1; k < cfg.eta_grid.size(); ++k)
        need(cfg.eta_grid[k] > cfg.eta_grid[k - 1], "bound.eta_grid", "eta_grid must be strictly ascending");
    need(cfg.eta_grid.empty() || cfg.eta_grid.front() >= 0.0, "bound.eta_grid", "eta_grid must start at >= 0");
    for (std::size_t k = 1; k < cfg.levels.size(); ++k)
        need(cfg.levels[k] > cfg.levels[k - 1], "analyze.levels", "levels must be strictly ascending");
    return cfg;
}

inline Config load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file " + path.string());
    return parse_config(is, path);
}

template <int Dim>
OperatorSpec<Dim> make_operator(const Config& cfg)
{
    if (cfg.op_kind == "heat")
        return OperatorSpec<Dim>::heat();
    Mat<Dim> m;
    for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j)
            m(i, j) = cfg.matrix[static_cast<std::size_t>(i * Dim + j)];
    try {
        if (cfg.op_kind == "linear")
            return OperatorSpec<Dim>::linear(m);
        return OperatorSpec<Dim>::grad_augmented(m, cfg.beta);
    } catch (const ArgError& e) {
        throw ConfigError(cfg.where("operator.matrix") + ": " + e.what());
    }
}

template <int Dim>
Scenario<Dim> make_scenario(const Config& cfg)
{
    if (cfg.dim != Dim)
        throw ConfigError("scenario dimension mismatch");
    Scenario<Dim> sc{ConvexRing<Dim>(parse_body<Dim>(cfg.outer, cfg.where("domain.outer")),
                                     parse_body<Dim>(cfg.inner, cfg.where("domain.inner")))};
    sc.resolution = cfg.resolution;
    sc.op = make_operator<Dim>(cfg);
    sc.initial = cfg.initial == "radial" ? InitialKind::Radial
                 : cfg.initial == "presolve" ? InitialKind::Presolve
                                             : InitialKind::Gauge;
    sc.t_end = cfg.t_end;
    sc.cfl_factor = cfg.cfl_factor;
    sc.snapshot_every = cfg.snapshot_every;
    sc.steady_tol = cfg.steady_tol;
    return sc;
}

} // namespace levelcurv
