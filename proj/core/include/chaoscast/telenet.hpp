#ifndef CHAOSCAST_TELENET_HPP
#define CHAOSCAST_TELENET_HPP

#include "chaoscast/data.hpp"
#include "chaoscast/dense.hpp"

#include <cstdint>
#include <vector>

namespace chaoscast::telenet {

// Temporal scale convention: scale s covers periods of 2^(s-2) to 2^(s-1)
// weeks and maps to wavelet detail level j = s - 2 (scale 3 = 2-4 weeks).
inline constexpr std::size_t kMinScale = 3;
inline std::size_t scale_to_level(std::size_t scale) { return scale - 2; }

/// Additive multiresolution decomposition: for every location,
/// sum_j details[j] + smooth reconstructs the input within 1e-8.
struct ScaleDecomposition {
    std::vector<DenseArray> details; // details[j-1] is the (T, N) level-j detail
    DenseArray smooth;               // (T, N)
    std::size_t levels = 0;
};

/// Maximal-overlap discrete wavelet transform with the Haar filter,
/// non-decimated, circular boundary. Requires T >= 2^levels.
ScaleDecomposition modwt(const data::GridSeries& series, std::size_t levels);

struct SimilarityResult {
    DenseArray matrix;                       // (N, N), symmetric, unit diagonal
    std::vector<std::size_t> zero_variance;  // locations with flat detail series
};

/// Pearson correlation between per-location detail series at the level of the
/// given scale, after dropping the first 2^j boundary-affected coefficients.
/// Pairs touching a zero-variance location get similarity 0 and are flagged.
SimilarityResult scale_similarity(const ScaleDecomposition& decomp, std::size_t scale);

struct ScaleNetwork {
    std::size_t scale = 0;
    DenseArray similarity;               // (N, N)
    std::vector<std::uint8_t> adjacency; // (N*N), symmetric, zero diagonal
    std::vector<std::size_t> degrees;    // per-location link counts
    std::size_t n = 0;

    bool edge(std::size_t i, std::size_t j) const { return adjacency[i * n + j] != 0; }
};

/// Threshold |similarity| >= tau off the diagonal, tau in (0, 1].
ScaleNetwork build_network(const SimilarityResult& similarity, std::size_t scale, double tau);

struct DegreeRecord {
    double lat = 0.0;
    double lon = 0.0;
    std::size_t degree = 0;
};

/// One record per location, in location order: plot-ready heatmap data.
std::vector<DegreeRecord> degree_heatmap(const ScaleNetwork& network,
                                         const std::vector<data::Location>& locations);

struct BoundingBox {
    double lat_min = -90.0, lat_max = 90.0;
    double lon_min = -180.0, lon_max = 180.0;
    bool contains(const data::Location& loc) const {
        return loc.lat >= lat_min && loc.lat <= lat_max && loc.lon >= lon_min && loc.lon <= lon_max;
    }
};

struct ConnectionEdge {
    std::size_t source = 0; // inside the region
    std::size_t target = 0;
    double src_lat = 0.0, src_lon = 0.0;
    double dst_lat = 0.0, dst_lon = 0.0;
    double similarity = 0.0;
    bool target_in_region = false;
};

/// Every network edge whose source endpoint lies inside the region. An empty
/// region yields an empty list.
std::vector<ConnectionEdge> connection_map(const ScaleNetwork& network,
                                           const std::vector<data::Location>& locations,
                                           const BoundingBox& region);

} // namespace chaoscast::telenet

#endif
