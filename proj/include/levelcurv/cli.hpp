#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "levelcurv/config.hpp"
#include "levelcurv/field_io.hpp"
#include "levelcurv/report.hpp"

namespace levelcurv {

// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitNumerics = 1, kExitConfig = 2, kExitFlags = 3 };

namespace detail {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write " + path.string());
    os << text;
    if (!os)
        throw Error("write failed for " + path.string());
}

inline std::string json_text(const Json& j)
{
    return j.dump(2) + "\n";
}

inline std::string snapshot_name(std::size_t index, double time)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "u_%04zu_%.6f.crf", index, time);
    return buf;
}

inline std::vector<fs::path> snapshot_files(const fs::path& dir)
{
    static const std::regex pattern(R"(u_\d{4}_.*\.crf)");
    std::vector<fs::path> out;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && std::regex_match(e.path().filename().string(), pattern))
                out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

template <int Dim>
int run_solve(const Config& cfg, const fs::path& out, std::ostream& log)
{
    const auto sc = make_scenario<Dim>(cfg);
    const auto res = solve_scenario(sc);
    for (const auto& old : snapshot_files(out))
        fs::remove(old);
    Json files = Json::array();
    for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
        const auto& s = res.snapshots[k];
        const std::string name = snapshot_name(k, s.field.time());
        save_field((out / name).string(), s.field);
        Json f;
        f["file"] = name;
        f["time"] = s.field.time();
        f["max_residual"] = s.max_residual;
        f["steady"] = s.steady;
        files.push_back(f);
    }
    Json j;
    j["scenario"] = scenario_json(cfg, sc, res);
    j["snapshots"] = files;
    write_text(out / "solve.json", json_text(j));
    log << "solve: " << res.snapshots.size() << " snapshots, " << res.steps << " steps"
        << (res.steady ? ", steady" : "") << " -> " << out.string() << "\n";
    for (const auto& w : res.warnings)
        log << "warning: " << w << "\n";
    return kExitOk;
}

template <int Dim>
int run_analyze(const Config& cfg, const fs::path& out, std::ostream& log)
{
    const auto sc = make_scenario<Dim>(cfg);
    const auto files = snapshot_files(out);
    if (files.empty())
        throw Error("no snapshot files in " + out.string() + "; run solve first");
    auto mask = build_grid(sc.ring, sc.resolution);
    const auto levels = cfg.analysis_levels();
    const auto lopt = level_options(cfg);
    RankProfile rank;
    rank.tolerance = cfg.rank_tol;
    Json names = Json::array();
    for (std::size_t k = 0; k < files.size(); ++k) {
        if (peek_field_dim(files[k].string()) != Dim)
            throw FormatError(files[k].string() + " does not match the configured dimension");
        const auto field = attach_mask<Dim>(mask, load_field<Dim>(files[k].string()));
        const auto curves = extract_levels(field, levels, lopt);
        std::ostringstream csv;
        for (std::size_t i = 0; i < curves.size(); ++i)
            write_level_csv(csv, curves[i], i == 0);
        char buf[32];
        std::snprintf(buf, sizeof buf, "levels_%04zu.csv", k);
        write_text(out / buf, csv.str());
        rank.times.push_back(rank_at(curves, field.time(), cfg.rank_tol));
        names.push_back(files[k].filename().string());
    }
    Json j;
    j["snapshots"] = names;
    j["rank"] = rank_json(rank);
    write_text(out / "rank.json", json_text(j));
    log << "analyze: " << files.size() << " snapshots, " << levels.size() << " levels -> " << out.string() << "\n";
    return kExitOk;
}

template <int Dim>
int run_verify(const Config& cfg, const fs::path& out, std::ostream& log)
{
    const auto sc = make_scenario<Dim>(cfg);
    const auto res = solve_scenario(sc);
    const auto v = verify_solution(cfg, sc, res);
    write_text(out / "report.json", json_text(v.report));
    for (const auto& it : v.report["flags"].items()) {
        const Json& f = it.value();
        log << (f["pass"].get<bool>() ? "PASS " : "FAIL ") << it.key() << (f["gating"].get<bool>() ? "" : " (info)")
            << "\n";
    }
    return v.pass ? kExitOk : kExitFlags;
}

template <int Dim>
int run_structure(const Config& cfg, const fs::path& out, std::ostream& log)
{
    const auto sc = make_scenario<Dim>(cfg);
    const auto res = solve_scenario(sc);
    ScanOptions so;
    so.samples_per_snapshot = cfg.structure_samples;
    so.directions = cfg.structure_directions;
    so.gradient_floor = cfg.gradient_floor;
    so.corner_exclusion = cfg.corner_exclusion;
    const auto rep = concavity_scan(sc.op, res.snapshots, so);
    Json j;
    j["scenario"] = scenario_json(cfg, sc, res);
    j["structure"] = structure_json(rep);
    write_text(out / "structure.json", json_text(j));
    log << "structure: " << rep.samples.size() << " states, worst margin " << rep.worst_hessian_margin << ", "
        << rep.violations.size() << " violations\n";
    return kExitOk;
}

inline std::string svg_chart(const std::vector<double>& x, const std::vector<double>& y, const std::string& title)
{
    const double w = 480, h = 320, pad = 40;
    double x0 = *std::min_element(x.begin(), x.end()), x1 = *std::max_element(x.begin(), x.end());
    double y0 = *std::min_element(y.begin(), y.end()), y1 = *std::max_element(y.begin(), y.end());
    if (x1 <= x0)
        x1 = x0 + 1;
    if (y1 <= y0)
        y1 = y0 + 1;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<title>" << title << "</title>\n";
    os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << w - 2 * pad << "\" height=\"" << h - 2 * pad
       << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double px = pad + (x[i] - x0) / (x1 - x0) * (w - 2 * pad);
        const double py = h - pad - (y[i] - y0) / (y1 - y0) * (h - 2 * pad);
        os << format_double(px) << "," << format_double(py) << (i + 1 < x.size() ? " " : "");
    }
    os << "\"/>\n";
    os << "<text x=\"" << pad << "\" y=\"" << pad - 10 << "\" font-size=\"12\">" << title << "</text>\n";
    os << "<text x=\"" << pad << "\" y=\"" << h - 10 << "\" font-size=\"11\">c in [" << format_double(x0) << ", "
       << format_double(x1) << "], kappa_u in [" << format_double(y0) << ", " << format_double(y1) << "]</text>\n";
    os << "</svg>\n";
    return os.str();
}

inline int run_plot(const fs::path& out, std::ostream& log)
{
    std::ifstream is(out / "report.json");
    if (!is)
        throw Error("no report.json in " + out.string() + "; run verify first");
    Json report;
    try {
        report = Json::parse(is);
    } catch (const std::exception& e) {
        throw FormatError(std::string("report.json: ") + e.what());
    }
    std::size_t written = 0;
    const auto& times = report.at("bound").at("times");
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto& t = times[k];
        if (!t.contains("levels")) {
            log << "plot: snapshot " << k << " has no bound data";
            if (t.contains("error"))
                log << " (" << t["error"].get<std::string>() << ")";
            log << "\n";
            continue;
        }
        std::ostringstream csv;
        csv << "c,kappa_u,bound_value,margin\n";
        std::vector<double> xs, ys;
        for (const auto& l : t["levels"]) {
            const double c = l["c"].get<double>(), k_u = l["kappa_u"].get<double>();
            csv << format_double(c) << "," << format_double(k_u) << ","
                << format_double(l["bound_value"].get<double>()) << "," << format_double(l["margin"].get<double>())
                << "\n";
            xs.push_back(c);
            ys.push_back(k_u);
        }
        char base[32];
        std::snprintf(base, sizeof base, "plot_%04zu", k);
        write_text(out / (std::string(base) + ".csv"), csv.str());
        char title[64];
        std::snprintf(title, sizeof title, "kappa_u(c) at t = %.6f", t["time"].get<double>());
        write_text(out / (std::string(base) + ".svg"), svg_chart(xs, ys, title));
        ++written;
    }
    log << "plot: " << written << " charts -> " << out.string() << "\n";
    return kExitOk;
}

template <int Dim>
int dispatch(const std::string& command, const Config& cfg, const fs::path& out, std::ostream& log)
{
    if (command == "solve")
        return run_solve<Dim>(cfg, out, log);
    if (command == "analyze")
        return run_analyze<Dim>(cfg, out, log);
    if (command == "verify")
        return run_verify<Dim>(cfg, out, log);
    if (command == "structure")
        return run_structure<Dim>(cfg, out, log);
    return run_plot(out, log);
}

} // namespace detail

// Runs one subcommand and maps failures to exit statuses: configuration
// errors 2, numerical or I/O failures 1, failed verification flags 3.
inline int run_command(const std::string& command, const std::filesystem::path& config_path,
                       const std::optional<std::filesystem::path>& out_dir, std::ostream& log, std::ostream& err)
{
    static const std::vector<std::string> commands = {"solve", "analyze", "verify", "structure", "plot"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end()) {
        err << "error: unknown subcommand '" << command << "'\n";
        return kExitConfig;
    }
    try {
        const Config cfg = load_config(config_path);
        const std::filesystem::path out = out_dir ? *out_dir : cfg.resolve(cfg.out_dir);
        std::filesystem::create_directories(out);
        return cfg.dim == 2 ? detail::dispatch<2>(command, cfg, out, log)
                            : detail::dispatch<3>(command, cfg, out, log);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerics;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerics;
    }
}

} // namespace levelcurv
