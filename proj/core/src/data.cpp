#include "chaoscast/data.hpp"

#include "chaoscast/errors.hpp"
#include "chaoscast/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace chaoscast::data {

namespace {

// ---------------------------------------------------------------- dates ----

std::chrono::sys_days parse_iso_date(const std::string& iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(iso.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
        throw DataError("invalid ISO date '" + iso + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw DataError("invalid ISO date '" + iso + "'");
    return std::chrono::sys_days{ymd};
}

std::string format_iso_date(std::chrono::sys_days days) {
    const std::chrono::year_month_day ymd{days};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

// ------------------------------------------------------------- numerics ----

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& cell, std::size_t line_no, std::size_t col_no) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    double v = 0.0;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError("parse error at line " + std::to_string(line_no) + ", column " +
                        std::to_string(col_no) + ": '" + cell + "' is not a number");
    }
    if (!std::isfinite(v)) {
        throw DataError("non-finite cell at line " + std::to_string(line_no) + ", column " +
                        std::to_string(col_no));
    }
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void check_unique_ids(const std::vector<Location>& locations) {
    std::set<std::string> seen;
    for (const Location& loc : locations) {
        if (!seen.insert(loc.id).second) {
            throw DataError("duplicate location id '" + loc.id + "'");
        }
    }
}

// ------------------------------------------------------ binary primitives ----

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

void put_string(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class ByteReader {
public:
    ByteReader(std::string bytes, std::string origin)
        : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(origin_ + ": truncated file (offset " + std::to_string(pos_) + ")");
        }
    }
    std::string bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

constexpr char kGridMagic[4] = {'C', 'T', 'G', 'R'};
constexpr std::uint32_t kGridVersion = 1;
constexpr char kCheckpointMagic[4] = {'C', 'T', 'C', 'K'};

// ----------------------------------------------------------- grid formats ----

std::string header_cell(const Location& loc) {
    return loc.id + "@" + format_double(loc.lat) + "@" + format_double(loc.lon);
}

Location parse_header_cell(const std::string& cell, std::size_t col_no) {
    const std::vector<std::string> parts = split(cell, '@');
    Location loc;
    if (parts.size() == 1) {
        loc.id = parts[0];
    } else if (parts.size() == 3) {
        loc.id = parts[0];
        loc.lat = parse_double(parts[1], 1, col_no);
        loc.lon = parse_double(parts[2], 1, col_no);
    } else {
        throw DataError("header column " + std::to_string(col_no) + ": expected 'id' or 'id@lat@lon', got '" +
                        cell + "'");
    }
    if (loc.id.empty()) throw DataError("header column " + std::to_string(col_no) + ": empty location id");
    return loc;
}

GridSeries load_grid_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split(line, ',');
    if (header.size() < 2 || header[0] != "week") {
        throw DataError(origin + ": expected header 'week,<id>,...'");
    }
    GridSeries series;
    for (std::size_t c = 1; c < header.size(); ++c) {
        series.locations.push_back(parse_header_cell(header[c], c));
    }
    check_unique_ids(series.locations);
    const std::size_t n = series.locations.size();

    std::vector<double> values;
    std::size_t line_no = 1;
    std::string first_week;
    std::size_t t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (cells.size() != n + 1) {
            throw DataError(origin + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " + std::to_string(n + 1));
        }
        if (t == 0) {
            first_week = cells[0];
            parse_iso_date(first_week);
        } else {
            // enforce the weekly cadence
            const std::string expected = week_offset(first_week, static_cast<std::int64_t>(t));
            if (cells[0] != expected) {
                throw DataError(origin + ": line " + std::to_string(line_no) + ": week '" + cells[0] +
                                "' breaks the weekly cadence (expected '" + expected + "')");
            }
        }
        for (std::size_t c = 1; c <= n; ++c) values.push_back(parse_double(cells[c], line_no, c));
        ++t;
    }
    if (t == 0) throw DataError(origin + ": no data rows");
    series.start_week = first_week;
    series.values = DenseArray({t, n}, std::move(values));
    return series;
}

std::string save_grid_csv(const GridSeries& series) {
    std::string out = "week";
    for (const Location& loc : series.locations) {
        out += ",";
        out += header_cell(loc);
    }
    out += "\n";
    for (std::size_t t = 0; t < series.steps(); ++t) {
        out += week_offset(series.start_week, static_cast<std::int64_t>(t));
        const auto row = series.row(t);
        for (double v : row) {
            out += ",";
            out += format_double(v);
        }
        out += "\n";
    }
    return out;
}

std::string save_grid_binary(const GridSeries& series) {
    std::string out(kGridMagic, 4);
    put_u32(out, kGridVersion);
    put_u64(out, series.steps());
    put_u64(out, series.n_locations());
    put_string(out, series.start_week);
    for (const Location& loc : series.locations) {
        put_string(out, loc.id);
        put_f64(out, loc.lat);
        put_f64(out, loc.lon);
    }
    for (double v : series.values.data) put_f64(out, v);
    return out;
}

GridSeries load_grid_binary(std::string bytes, const std::string& origin) {
    ByteReader r(std::move(bytes), origin);
    std::uint32_t magic = r.u32();
    std::uint32_t expect;
    std::memcpy(&expect, kGridMagic, 4);
    if (magic != expect) throw FormatError(origin + ": bad magic, not a grid file");
    const std::uint32_t version = r.u32();
    if (version != kGridVersion) {
        throw FormatError(origin + ": unsupported grid format version " + std::to_string(version));
    }
    const std::uint64_t t = r.u64();
    const std::uint64_t n = r.u64();
    GridSeries series;
    series.start_week = r.str();
    parse_iso_date(series.start_week);
    for (std::uint64_t i = 0; i < n; ++i) {
        Location loc;
        loc.id = r.str();
        loc.lat = r.f64();
        loc.lon = r.f64();
        series.locations.push_back(std::move(loc));
    }
    check_unique_ids(series.locations);
    std::vector<double> values(t * n);
    for (double& v : values) {
        v = r.f64();
        if (!std::isfinite(v)) throw DataError(origin + ": non-finite value in grid");
    }
    series.values = DenseArray({t, n}, std::move(values));
    if (series.steps() < 1) throw DataError(origin + ": grid has no rows");
    return series;
}

} // namespace

GridSeries GridSeries::head(std::size_t rows) const {
    if (rows > steps()) throw DataError("head: requested more rows than the series has");
    GridSeries out;
    out.locations = locations;
    out.start_week = start_week;
    out.values = DenseArray({rows, n_locations()},
                            std::vector<double>(values.data.begin(),
                                                values.data.begin() + rows * n_locations()));
    return out;
}

GridSeries GridSeries::tail(std::size_t rows) const {
    if (rows > steps()) throw DataError("tail: requested more rows than the series has");
    GridSeries out;
    out.locations = locations;
    out.start_week = week_offset(start_week, static_cast<std::int64_t>(steps() - rows));
    out.values = DenseArray({rows, n_locations()},
                            std::vector<double>(values.data.end() - rows * n_locations(),
                                                values.data.end()));
    return out;
}

std::string week_offset(const std::string& iso_date, std::int64_t weeks) {
    return format_iso_date(parse_iso_date(iso_date) + std::chrono::days{7 * weeks});
}

std::int64_t weeks_between(const std::string& from_iso, const std::string& to_iso) {
    const auto delta = parse_iso_date(to_iso) - parse_iso_date(from_iso);
    if (delta.count() % 7 != 0) {
        throw DataError("dates '" + from_iso + "' and '" + to_iso + "' are not a whole number of weeks apart");
    }
    return delta.count() / 7;
}

GridSeries load_grid(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kGridMagic, 4) == 0) {
        return load_grid_binary(std::move(bytes), path.string());
    }
    return load_grid_csv(bytes, path.string());
}

void save_grid(const GridSeries& series, const std::filesystem::path& path) {
    if (series.steps() < 1) throw DataError("save_grid: series has no rows");
    if (series.locations.size() != series.n_locations()) {
        throw DataError("save_grid: location metadata does not match the value columns");
    }
    check_unique_ids(series.locations);
    if (!series.values.all_finite()) throw DataError("save_grid: series contains non-finite values");
    if (path.extension() == ".csv") {
        write_file(path, save_grid_csv(series));
    } else {
        write_file(path, save_grid_binary(series));
    }
}

Normalizer fit_normalizer(const GridSeries& series) {
    if (series.steps() < 2) throw DataError("fit_normalizer: need at least 2 time steps");
    const std::size_t t = series.steps(), n = series.n_locations();
    Normalizer norm;
    norm.mean = DenseArray::zeros({1, n});
    norm.std = DenseArray::zeros({1, n});
    for (std::size_t c = 0; c < n; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < t; ++i) sum += series.values.data[i * n + c];
        const double mean = sum / static_cast<double>(t);
        double ss = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            const double d = series.values.data[i * n + c] - mean;
            ss += d * d;
        }
        norm.mean.data[c] = mean;
        norm.std.data[c] = std::max(std::sqrt(ss / static_cast<double>(t)), 1e-8);
    }
    return norm;
}

GridSeries apply(const Normalizer& norm, const GridSeries& series) {
    const std::size_t n = series.n_locations();
    if (norm.mean.size() != n) throw ShapeError("apply: normalizer size does not match series");
    GridSeries out = series;
    for (std::size_t i = 0; i < series.steps(); ++i) {
        for (std::size_t c = 0; c < n; ++c) {
            double& v = out.values.data[i * n + c];
            v = (v - norm.mean.data[c]) / norm.std.data[c];
        }
    }
    return out;
}

GridSeries invert(const Normalizer& norm, const GridSeries& series) {
    const std::size_t n = series.n_locations();
    if (norm.mean.size() != n) throw ShapeError("invert: normalizer size does not match series");
    GridSeries out = series;
    for (std::size_t i = 0; i < series.steps(); ++i) {
        for (std::size_t c = 0; c < n; ++c) {
            double& v = out.values.data[i * n + c];
            v = v * norm.std.data[c] + norm.mean.data[c];
        }
    }
    return out;
}

namespace {

std::vector<Location> synthetic_locations(std::size_t n) {
    std::vector<Location> locs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
        locs[i].id = "loc" + std::to_string(i);
        locs[i].lat = -60.0 + 120.0 * f;
        locs[i].lon = -150.0 + 300.0 * f;
    }
    return locs;
}

} // namespace

GridSeries gen_logistic(double r, double x0, std::size_t steps) {
    if (!(x0 > 0.0 && x0 < 1.0)) throw DataError("gen_logistic: x0 must be in (0, 1)");
    if (steps < 1) throw DataError("gen_logistic: steps must be >= 1");
    GridSeries series;
    series.locations = synthetic_locations(1);
    series.values = DenseArray({steps, 1});
    double x = x0;
    for (std::size_t t = 0; t < steps; ++t) {
        series.values.data[t] = x;
        x = r * x * (1.0 - x);
    }
    return series;
}

GridSeries gen_lorenz(const LorenzParams& params, std::size_t steps, LorenzComponent component) {
    if (!(params.dt > 0.0)) throw DataError("gen_lorenz: dt must be > 0");
    if (steps < 1) throw DataError("gen_lorenz: steps must be >= 1");
    const std::size_t n = component == LorenzComponent::all ? 3 : 1;
    GridSeries series;
    series.locations = synthetic_locations(n);
    series.values = DenseArray({steps, n});

    std::array<double, 3> s = params.initial;
    auto deriv = [&](const std::array<double, 3>& v) {
        return std::array<double, 3>{params.sigma * (v[1] - v[0]),
                                     v[0] * (params.rho - v[2]) - v[1],
                                     v[0] * v[1] - params.beta * v[2]};
    };
    auto emit = [&](std::size_t t) {
        if (component == LorenzComponent::all) {
            for (std::size_t c = 0; c < 3; ++c) series.values.data[t * 3 + c] = s[c];
        } else {
            series.values.data[t] = s[static_cast<std::size_t>(component)];
        }
    };
    for (std::size_t t = 0; t < steps; ++t) {
        emit(t);
        const auto k1 = deriv(s);
        std::array<double, 3> tmp;
        for (int i = 0; i < 3; ++i) tmp[i] = s[i] + 0.5 * params.dt * k1[i];
        const auto k2 = deriv(tmp);
        for (int i = 0; i < 3; ++i) tmp[i] = s[i] + 0.5 * params.dt * k2[i];
        const auto k3 = deriv(tmp);
        for (int i = 0; i < 3; ++i) tmp[i] = s[i] + params.dt * k3[i];
        const auto k4 = deriv(tmp);
        for (int i = 0; i < 3; ++i) {
            s[i] += params.dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    return series;
}

GridSeries gen_seasonal_chaotic(double amplitude, std::size_t period_weeks, double chaos_weight,
                                std::uint64_t seed, std::size_t steps, std::size_t n_locations) {
    if (period_weeks < 2) throw DataError("gen_seasonal_chaotic: period_weeks must be >= 2");
    if (n_locations < 1) throw DataError("gen_seasonal_chaotic: n_locations must be >= 1");
    if (steps < 1) throw DataError("gen_seasonal_chaotic: steps must be >= 1");
    GridSeries series;
    series.locations = synthetic_locations(n_locations);
    series.values = DenseArray({steps, n_locations});

    Rng rng(seed);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t c = 0; c < n_locations; ++c) {
        const double phase = two_pi * static_cast<double>(c) / static_cast<double>(n_locations);
        double x = rng.uniform(0.01, 0.99); // independent logistic state per location
        for (std::size_t t = 0; t < steps; ++t) {
            const double seasonal =
                amplitude * std::sin(two_pi * static_cast<double>(t) / static_cast<double>(period_weeks) + phase);
            series.values.data[t * n_locations + c] = seasonal + chaos_weight * (2.0 * x - 1.0);
            x = 4.0 * x * (1.0 - x);
        }
    }
    return series;
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void put_size_list(std::string& out, const std::vector<std::size_t>& v) {
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (std::size_t x : v) put_u64(out, x);
}

std::vector<std::size_t> get_size_list(ByteReader& r) {
    const std::uint32_t n = r.u32();
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = r.u64();
    return v;
}

void put_array(std::string& out, const DenseArray& a) {
    put_u64(out, a.rows());
    put_u64(out, a.cols());
    for (double v : a.data) put_f64(out, v);
}

DenseArray get_array(ByteReader& r) {
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    std::vector<double> data(rows * cols);
    for (double& v : data) v = r.f64();
    return DenseArray({rows, cols}, std::move(data));
}

} // namespace

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
    std::string out(kCheckpointMagic, 4);
    put_u32(out, cp.format_version);
    const model::ModelConfig& c = cp.model_config;
    put_u64(out, c.n_locations);
    put_u64(out, c.window);
    put_size_list(out, c.dlc_hidden);
    put_size_list(out, c.itc_encoder_hidden);
    put_u64(out, c.latent_dim);
    put_size_list(out, c.itc_decoder_hidden);
    put_u64(out, c.seed);
    put_f64(out, c.logvar_lo);
    put_f64(out, c.logvar_hi);
    std::uint32_t n_arrays = 0;
    cp.params.for_each([&](const DenseArray&) { ++n_arrays; });
    put_u32(out, n_arrays);
    cp.params.for_each([&](const DenseArray& a) { put_array(out, a); });
    put_array(out, cp.normalizer.mean);
    put_array(out, cp.normalizer.std);
    put_string(out, cp.train_config_digest);
    write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    ByteReader r(read_file(path), path.string());
    std::uint32_t magic = r.u32();
    std::uint32_t expect;
    std::memcpy(&expect, kCheckpointMagic, 4);
    if (magic != expect) throw FormatError(path.string() + ": bad magic, not a checkpoint");
    Checkpoint cp;
    cp.format_version = r.u32();
    if (cp.format_version != kCheckpointVersion) {
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(cp.format_version));
    }
    model::ModelConfig& c = cp.model_config;
    c.n_locations = r.u64();
    c.window = r.u64();
    c.dlc_hidden = get_size_list(r);
    c.itc_encoder_hidden = get_size_list(r);
    c.latent_dim = r.u64();
    c.itc_decoder_hidden = get_size_list(r);
    c.seed = r.u64();
    c.logvar_lo = r.f64();
    c.logvar_hi = r.f64();
    c.validate();

    // Rebuild the layer structure from the config, then overwrite with the
    // stored arrays, checking that every shape matches.
    cp.params = model::init_params(c);
    const std::uint32_t n_arrays = r.u32();
    std::uint32_t expected_arrays = 0;
    cp.params.for_each([&](const DenseArray&) { ++expected_arrays; });
    if (n_arrays != expected_arrays) {
        throw FormatError(path.string() + ": checkpoint holds " + std::to_string(n_arrays) +
                          " arrays, config implies " + std::to_string(expected_arrays));
    }
    cp.params.for_each([&](DenseArray& a) {
        DenseArray stored = get_array(r);
        if (stored.shape != a.shape) {
            throw FormatError(path.string() + ": array shape " + stored.shape_string() +
                              " does not match config shape " + a.shape_string());
        }
        if (!stored.all_finite()) throw DataError(path.string() + ": non-finite parameter value");
        a = std::move(stored);
    });
    cp.normalizer.mean = get_array(r);
    cp.normalizer.std = get_array(r);
    if (cp.normalizer.mean.size() != c.n_locations || cp.normalizer.std.size() != c.n_locations) {
        throw FormatError(path.string() + ": normalizer size does not match n_locations");
    }
    for (double s : cp.normalizer.std.data) {
        if (!(s > 0.0)) throw DataError(path.string() + ": normalizer std must be positive");
    }
    cp.train_config_digest = r.str();
    if (!r.exhausted()) throw FormatError(path.string() + ": trailing bytes after checkpoint");
    return cp;
}

} // namespace chaoscast::data
