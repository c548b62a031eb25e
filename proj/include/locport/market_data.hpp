#pragma once

/*
 * Price ingestion and the derived statistics the models consume:
 *
 *   simple returns       r_it = (P_i(t) - P_i(t-1)) / P_i(t-1)   -> scenarios
 *   logarithmic returns  R_it = ln P_i(t) - ln P_i(t-1)          -> correlations
 *   distances            d_ij = sqrt(2 (1 - rho_ij))
 *
 * All types are immutable values once built.
 */

#include "locport/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace locport {

/// Dates x assets panel of strictly positive prices.
struct PricePanel {
    std::vector<std::string> dates;     // T+1 labels, strictly increasing
    std::vector<std::string> asset_ids; // n
    Matrix prices;                      // (T+1) x n

    std::size_t num_assets() const { return asset_ids.size(); }
    std::size_t num_dates() const { return dates.size(); }

    /// Rows [first, last] inclusive of both price observations.
    PricePanel slice(std::size_t first, std::size_t last) const;
};

enum class ReturnKind { Simple, Logarithmic };

struct ReturnPanel {
    Matrix returns; // T x n
    ReturnKind kind = ReturnKind::Simple;
    std::vector<std::string> asset_ids;

    std::size_t num_periods() const { return returns.rows(); }
    std::size_t num_assets() const { return returns.cols(); }
};

/// Scenario returns r_jt with probabilities p_t and expected returns mu_j.
struct ScenarioSet {
    Matrix returns;            // T x n, simple returns
    std::vector<double> probs; // T
    std::vector<double> mu;    // n

    std::size_t num_scenarios() const { return returns.rows(); }
    std::size_t num_assets() const { return returns.cols(); }

    /// y_t(x) = sum_j r_jt x_j for every scenario.
    std::vector<double> portfolio_returns(std::span<const double> weights) const;
    /// mu(x) = sum_j mu_j x_j.
    double expected_return(std::span<const double> weights) const;
};

struct DistanceMatrix {
    Matrix d;   // n x n, values in [0, 2]
    Matrix rho; // n x n Pearson correlations
    std::vector<std::string> warnings;

    std::size_t size() const { return d.rows(); }
};

PricePanel load_prices(const std::filesystem::path& path);
PricePanel parse_prices(const std::string& text);

/// CSV text in the same layout load_prices reads, at round-trip precision.
std::string format_prices(const PricePanel& panel);
void write_prices(const PricePanel& panel, const std::filesystem::path& path);

ReturnPanel simple_returns(const PricePanel& panel);
ReturnPanel log_returns(const PricePanel& panel);

/// Pearson correlations (sample covariance) of logarithmic returns. A series
/// with zero variance gets rho = 0 against every other asset and a warning.
DistanceMatrix correlation_distances(const ReturnPanel& returns);

/// Probabilities default to uniform 1/T; supplied ones are renormalized.
ScenarioSet scenario_set(const ReturnPanel& returns,
                         const std::optional<std::vector<double>>& probs = std::nullopt);

struct SyntheticMarketSpec {
    std::size_t num_assets = 0;
    std::size_t num_periods = 0;            // T returns, T+1 prices
    std::vector<std::size_t> block_sizes;   // partition of the assets, in order
    std::uint64_t seed = 0;
};

/// Geometric random walk driven by a market factor plus one factor per
/// block, so that assets in the same block co-move more than across blocks.
PricePanel synthetic_market(const SyntheticMarketSpec& spec);

} // namespace locport
