#ifndef CHAOSCAST_DATA_HPP
#define CHAOSCAST_DATA_HPP

#include "chaoscast/dense.hpp"
#include "chaoscast/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chaoscast::data {

struct Location {
    std::string id;
    double lat = 0.0; // degrees in [-90, 90]
    double lon = 0.0; // degrees in [-180, 180]
};

/// T x N grid of weekly observations. Rows are time steps, columns are
/// locations. Values are guaranteed finite after ingestion.
struct GridSeries {
    DenseArray values; // (T, N)
    std::vector<Location> locations;
    std::string start_week = "1880-01-04"; // ISO date of row 0; cadence is weekly

    std::size_t steps() const { return values.rows(); }
    std::size_t n_locations() const { return values.cols(); }
    std::span<const double> row(std::size_t t) const { return values.row_span(t); }

    /// First `rows` time steps (locations and start week preserved).
    GridSeries head(std::size_t rows) const;
    /// Last `rows` time steps.
    GridSeries tail(std::size_t rows) const;
};

/// ISO date helpers for the weekly cadence.
std::string week_offset(const std::string& iso_date, std::int64_t weeks);
std::int64_t weeks_between(const std::string& from_iso, const std::string& to_iso);

// Grid persistence. Two formats:
//  - CSV: header `week,<id1>,<id2>,...`; ids may carry coordinates as
//    `id@lat@lon`; one row per week with the ISO date in the week column.
//    Values round-trip through 17 significant digits.
//  - binary (magic CTGR): bit-exact round trip.
// save_grid picks the format from the extension (".csv" => CSV, else binary);
// load_grid sniffs the magic bytes.
GridSeries load_grid(const std::filesystem::path& path);
void save_grid(const GridSeries& series, const std::filesystem::path& path);

/// Per-location z-score statistics. Population standard deviation, floored at
/// 1e-8 so constant columns stay usable.
struct Normalizer {
    DenseArray mean; // (1, N)
    DenseArray std;  // (1, N), strictly positive
};

Normalizer fit_normalizer(const GridSeries& series);
GridSeries apply(const Normalizer& norm, const GridSeries& series);
GridSeries invert(const Normalizer& norm, const GridSeries& series);

// Synthetic chaotic systems (deterministic for fixed arguments).

/// Logistic map x_{t+1} = r x_t (1 - x_t), single location.
GridSeries gen_logistic(double r, double x0, std::size_t steps);

enum class LorenzComponent { x, y, z, all };

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    std::array<double, 3> initial{1.0, 1.0, 1.0};
    double dt = 0.01;
};

/// Lorenz-63 integrated with classic fourth-order Runge-Kutta.
GridSeries gen_lorenz(const LorenzParams& params, std::size_t steps, LorenzComponent component);

/// Phase-shifted seasonal sinusoid plus a logistic-map (r=4) irregular
/// component rescaled to [-1, 1], independent per location.
GridSeries gen_seasonal_chaotic(double amplitude, std::size_t period_weeks, double chaos_weight,
                                std::uint64_t seed, std::size_t steps, std::size_t n_locations);

/// Trained-model snapshot: everything needed to resume prediction.
struct Checkpoint {
    std::uint32_t format_version = 1;
    model::ModelConfig model_config;
    model::ModelParams params;
    Normalizer normalizer;
    std::string train_config_digest;
};

// Binary format (magic CTCK). Round-trips parameters bit-exactly; an
// unrecognized version or a params/config shape mismatch is rejected.
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace chaoscast::data

#endif
