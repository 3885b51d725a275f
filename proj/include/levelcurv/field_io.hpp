#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "levelcurv/errors.hpp"
#include "levelcurv/grid.hpp"

// Field file (UTF-8 text):
//   CRFIELD 1 <dim> <nx> <ny> [<nz>]          node counts per axis
//   <origin...> <spacing...> <time>
//   node values, row-major with the last axis fastest, 17 significant
//   digits, Exterior nodes as `nan`.

namespace levelcurv {

inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Grid, values and time of a field file, before a mask is attached.
template <int Dim>
struct RawField {
    Grid<Dim> grid;
    std::vector<double> values;
    double time = 0.0;
};

template <int Dim>
void write_field(std::ostream& os, const ScalarField<Dim>& field)
{
    const auto& g = field.grid();
    os << "CRFIELD 1 " << Dim;
    for (int a = 0; a < Dim; ++a)
        os << ' ' << g.nodes(a);
    os << '\n';
    for (int a = 0; a < Dim; ++a)
        os << format_double(g.origin[a]) << ' ';
    for (int a = 0; a < Dim; ++a)
        os << format_double(g.spacing[a]) << ' ';
    os << format_double(field.time()) << '\n';
    const auto row = static_cast<std::size_t>(g.nodes(Dim - 1));
    const auto& v = field.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << format_double(v[i]);
        os << ((i + 1) % row == 0 ? '\n' : ' ');
    }
}

namespace detail {

inline double parse_number(const std::string& tok, bool allow_nan)
{
    if (tok == "nan") {
        if (!allow_nan)
            throw FormatError("unexpected nan in header");
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw FormatError("malformed number '" + tok + "'");
    if (!std::isfinite(v))
        throw FormatError("non-finite value '" + tok + "'");
    return v;
}

} // namespace detail

template <int Dim>
RawField<Dim> read_field(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw FormatError("empty field file");
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    int dim = 0;
    head >> magic >> version >> dim;
    if (!head || magic != "CRFIELD" || version != 1)
        throw FormatError("missing CRFIELD 1 header");
    if (dim != Dim)
        throw FormatError("field dimension " + std::to_string(dim) + " does not match " + std::to_string(Dim));
    RawField<Dim> raw;
    for (int a = 0; a < Dim; ++a) {
        long n = 0;
        if (!(head >> n) || n < 2)
            throw FormatError("bad node count in header");
        raw.grid.cells[static_cast<std::size_t>(a)] = static_cast<int>(n - 1);
    }
    std::string extra;
    if (head >> extra)
        throw FormatError("trailing tokens in header");

    if (!std::getline(is, line))
        throw FormatError("missing geometry line");
    std::istringstream geo(line);
    std::vector<double> nums;
    std::string tok;
    while (geo >> tok)
        nums.push_back(detail::parse_number(tok, false));
    if (nums.size() != static_cast<std::size_t>(2 * Dim + 1))
        throw FormatError("geometry line needs origin, spacing and time");
    for (int a = 0; a < Dim; ++a) {
        raw.grid.origin[a] = nums[static_cast<std::size_t>(a)];
        raw.grid.spacing[a] = nums[static_cast<std::size_t>(Dim + a)];
        if (!(raw.grid.spacing[a] > 0.0))
            throw FormatError("spacing must be positive");
    }
    raw.time = nums.back();

    const std::size_t expected = raw.grid.size();
    raw.values.reserve(expected);
    while (is >> tok) {
        if (raw.values.size() == expected)
            throw FormatError("more values than the header declares");
        raw.values.push_back(detail::parse_number(tok, true));
    }
    if (raw.values.size() != expected)
        throw FormatError("expected " + std::to_string(expected) + " values, found "
                          + std::to_string(raw.values.size()));
    return raw;
}

// Attaches a mask to a file's contents; the grid must match bit-exactly and
// the nan pattern must coincide with the Exterior nodes.
template <int Dim>
ScalarField<Dim> attach_mask(MaskPtr<Dim> mask, RawField<Dim> raw)
{
    if (!(raw.grid == mask->grid()))
        throw FormatError("field grid does not match the configured grid");
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const bool exterior = mask->kind(i) == NodeKind::Exterior;
        if (exterior != std::isnan(raw.values[i]))
            throw FormatError("nan pattern does not match the mask at node " + std::to_string(i));
    }
    return ScalarField<Dim>(std::move(mask), std::move(raw.values), raw.time);
}

template <int Dim>
void save_field(const std::string& path, const ScalarField<Dim>& field)
{
    std::ofstream os(path);
    if (!os)
        throw FormatError("cannot open " + path + " for writing");
    write_field(os, field);
    if (!os)
        throw FormatError("write failed for " + path);
}

template <int Dim>
RawField<Dim> load_field(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw FormatError("cannot open " + path);
    return read_field<Dim>(is);
}

// Dimension recorded in a field file header (0 if unreadable).
inline int peek_field_dim(const std::string& path)
{
    std::ifstream is(path);
    std::string magic;
    int version = 0;
    int dim = 0;
    is >> magic >> version >> dim;
    return (is && magic == "CRFIELD") ? dim : 0;
}

} // namespace levelcurv
