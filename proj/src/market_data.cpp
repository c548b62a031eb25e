#include "locport/market_data.hpp"

#include "locport/errors.hpp"
#include "locport/numfmt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace locport {

namespace {

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
        fields.emplace_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool looks_iso_date(const std::string& s) {
    return s.size() >= 10 && std::isdigit(static_cast<unsigned char>(s[0])) && s[4] == '-' && s[7] == '-';
}

void require_two_prices(const PricePanel& panel) {
    if (panel.num_dates() < 2) {
        throw Error(ErrorCode::TooFewObservations,
                    "need at least 2 price rows, got " + std::to_string(panel.num_dates()));
    }
}

} // namespace

PricePanel PricePanel::slice(std::size_t first, std::size_t last) const {
    if (first > last || last >= num_dates()) {
        throw Error(ErrorCode::DimensionMismatch, "price slice out of range");
    }
    PricePanel out;
    out.asset_ids = asset_ids;
    out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(first),
                     dates.begin() + static_cast<std::ptrdiff_t>(last + 1));
    out.prices = prices.row_slice(first, last + 1);
    return out;
}

std::vector<double> ScenarioSet::portfolio_returns(std::span<const double> weights) const {
    std::vector<double> y(num_scenarios(), 0.0);
    for (std::size_t t = 0; t < num_scenarios(); ++t) {
        const auto row = returns.row(t);
        y[t] = std::inner_product(row.begin(), row.end(), weights.begin(), 0.0);
    }
    return y;
}

double ScenarioSet::expected_return(std::span<const double> weights) const {
    return std::inner_product(mu.begin(), mu.end(), weights.begin(), 0.0);
}

PricePanel parse_prices(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    PricePanel panel;
    std::vector<std::vector<double>> rows;

    struct Offender {
        std::string asset;
        std::string date;
    };
    std::vector<Offender> offenders;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto fields = split_fields(line);

        if (panel.asset_ids.empty()) {
            if (fields.size() < 2) throw MalformedCsv(line_no, "header needs a date column and at least one asset");
            for (std::size_t c = 1; c < fields.size(); ++c) {
                if (fields[c].empty()) throw MalformedCsv(line_no, "empty asset name in column " + std::to_string(c + 1));
                panel.asset_ids.push_back(fields[c]);
            }
            continue;
        }

        if (fields.size() != panel.asset_ids.size() + 1) {
            throw MalformedCsv(line_no, "expected " + std::to_string(panel.asset_ids.size() + 1) + " fields, got " +
                                            std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw MalformedCsv(line_no, "missing date label");

        std::vector<double> values(panel.asset_ids.size());
        for (std::size_t c = 0; c < values.size(); ++c) {
            const auto& cell = fields[c + 1];
            if (cell.empty()) throw MalformedCsv(line_no, "missing price for " + panel.asset_ids[c]);
            const auto parsed = parse_double(cell);
            if (!parsed || !std::isfinite(*parsed)) {
                throw MalformedCsv(line_no, "non-numeric price '" + cell + "' for " + panel.asset_ids[c]);
            }
            values[c] = *parsed;
            if (*parsed <= 0.0) offenders.push_back({panel.asset_ids[c], fields[0]});
        }
        panel.dates.push_back(fields[0]);
        rows.push_back(std::move(values));
    }

    if (panel.asset_ids.empty()) throw MalformedCsv(line_no, "no header row");
    if (rows.empty()) throw MalformedCsv(line_no, "no price rows");

    if (!offenders.empty()) {
        std::string msg = "non-positive prices:";
        for (const auto& o : offenders) msg += " " + o.asset + "@" + o.date;
        throw Error(ErrorCode::NonPositivePrice, msg);
    }

    const bool iso = std::all_of(panel.dates.begin(), panel.dates.end(), looks_iso_date);
    for (std::size_t r = 1; r < panel.dates.size(); ++r) {
        const bool ordered = iso ? panel.dates[r - 1] < panel.dates[r] : panel.dates[r - 1] != panel.dates[r];
        if (!ordered) throw MalformedCsv(r + 2, "dates not strictly increasing at '" + panel.dates[r] + "'");
    }

    panel.prices = Matrix(rows.size(), panel.asset_ids.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].begin(), rows[r].end(), panel.prices.row(r).begin());
    }
    return panel;
}

PricePanel load_prices(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_prices(buf.str());
}

std::string format_prices(const PricePanel& panel) {
    std::string out = "date";
    for (const auto& id : panel.asset_ids) out += "," + id;
    out += "\n";
    for (std::size_t r = 0; r < panel.num_dates(); ++r) {
        out += panel.dates[r];
        for (double v : panel.prices.row(r)) {
            out += ",";
            out += format_double(v);
        }
        out += "\n";
    }
    return out;
}

void write_prices(const PricePanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
    out << format_prices(panel);
}

ReturnPanel simple_returns(const PricePanel& panel) {
    require_two_prices(panel);
    const std::size_t T = panel.num_dates() - 1;
    ReturnPanel out{Matrix(T, panel.num_assets()), ReturnKind::Simple, panel.asset_ids};
    for (std::size_t t = 1; t <= T; ++t) {
        for (std::size_t i = 0; i < panel.num_assets(); ++i) {
            const double prev = panel.prices(t - 1, i);
            out.returns(t - 1, i) = (panel.prices(t, i) - prev) / prev;
        }
    }
    return out;
}

ReturnPanel log_returns(const PricePanel& panel) {
    require_two_prices(panel);
    const std::size_t T = panel.num_dates() - 1;
    ReturnPanel out{Matrix(T, panel.num_assets()), ReturnKind::Logarithmic, panel.asset_ids};
    for (std::size_t t = 1; t <= T; ++t) {
        for (std::size_t i = 0; i < panel.num_assets(); ++i) {
            out.returns(t - 1, i) = std::log(panel.prices(t, i)) - std::log(panel.prices(t - 1, i));
        }
    }
    return out;
}

DistanceMatrix correlation_distances(const ReturnPanel& returns) {
    if (returns.kind != ReturnKind::Logarithmic) {
        throw Error(ErrorCode::WrongReturnKind, "correlation distances require logarithmic returns");
    }
    const std::size_t T = returns.num_periods();
    const std::size_t n = returns.num_assets();
    if (T < 2) throw Error(ErrorCode::TooFewObservations, "need at least 2 return periods for correlations");

    std::vector<double> mean(n, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < n; ++i) mean[i] += returns.returns(t, i);
    for (double& m : mean) m /= static_cast<double>(T);

    Matrix cov(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                s += (returns.returns(t, i) - mean[i]) * (returns.returns(t, j) - mean[j]);
            }
            cov(i, j) = cov(j, i) = s / static_cast<double>(T - 1);
        }
    }

    DistanceMatrix out{Matrix(n, n), Matrix(n, n), {}};
    for (std::size_t i = 0; i < n; ++i) {
        if (!(cov(i, i) > 0.0)) {
            const std::string id = i < returns.asset_ids.size() ? returns.asset_ids[i] : std::to_string(i);
            out.warnings.push_back("zero-variance return series for " + id + "; correlations set to 0");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.rho(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double rho = 0.0;
            if (cov(i, i) > 0.0 && cov(j, j) > 0.0) {
                rho = std::clamp(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)), -1.0, 1.0);
            }
            out.rho(i, j) = out.rho(j, i) = rho;
            out.d(i, j) = out.d(j, i) = std::sqrt(2.0 * (1.0 - rho));
        }
    }
    return out;
}

ScenarioSet scenario_set(const ReturnPanel& returns, const std::optional<std::vector<double>>& probs) {
    if (returns.kind != ReturnKind::Simple) {
        throw Error(ErrorCode::WrongReturnKind, "scenario sets are built from simple returns");
    }
    const std::size_t T = returns.num_periods();
    const std::size_t n = returns.num_assets();
    if (T == 0) throw Error(ErrorCode::TooFewObservations, "empty return panel");

    ScenarioSet out;
    out.returns = returns.returns;
    if (probs) {
        if (probs->size() != T) {
            throw Error(ErrorCode::BadProbabilities,
                        "expected " + std::to_string(T) + " probabilities, got " + std::to_string(probs->size()));
        }
        double total = 0.0;
        for (double p : *probs) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::BadProbabilities, "negative or non-finite probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw Error(ErrorCode::BadProbabilities, "probabilities sum to " + format_double(total));
        }
        out.probs = *probs;
        for (double& p : out.probs) p /= total;
    } else {
        out.probs.assign(T, 1.0 / static_cast<double>(T));
    }

    out.mu.assign(n, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < n; ++j) out.mu[j] += out.probs[t] * out.returns(t, j);
    return out;
}

PricePanel synthetic_market(const SyntheticMarketSpec& spec) {
    const std::size_t n = spec.num_assets;
    if (n < 2) throw Error(ErrorCode::BadBlockSpec, "need at least 2 assets");
    if (spec.num_periods < 2) throw Error(ErrorCode::TooFewObservations, "need at least 2 periods");
    if (spec.block_sizes.empty() ||
        std::any_of(spec.block_sizes.begin(), spec.block_sizes.end(), [](std::size_t b) { return b == 0; }) ||
        std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(), std::size_t{0}) != n) {
        throw Error(ErrorCode::BadBlockSpec, "block sizes must be positive and sum to " + std::to_string(n));
    }

    std::vector<std::size_t> block_of(n);
    for (std::size_t b = 0, i = 0; b < spec.block_sizes.size(); ++b)
        for (std::size_t k = 0; k < spec.block_sizes[b]; ++k) block_of[i++] = b;

    // Weekly scale: ~1.5% market vol, ~2% block vol, ~1% idiosyncratic.
    constexpr double market_vol = 0.015;
    constexpr double block_vol = 0.02;
    constexpr double idio_vol = 0.01;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> drift_dist(0.0005, 0.003);
    std::uniform_real_distribution<double> loading_dist(0.8, 1.2);

    std::vector<double> drift(n), loading(n);
    for (std::size_t i = 0; i < n; ++i) {
        drift[i] = drift_dist(rng);
        loading[i] = loading_dist(rng);
    }

    PricePanel panel;
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = "A";
        if (i + 1 < 10) id += "0";
        id += std::to_string(i + 1);
        panel.asset_ids.push_back(id);
    }

    using namespace std::chrono;
    sys_days day = sys_days{year{2000} / January / 7};
    panel.prices = Matrix(spec.num_periods + 1, n);
    for (std::size_t i = 0; i < n; ++i) panel.prices(0, i) = 100.0;
    std::vector<double> block_shock(spec.block_sizes.size());
    for (std::size_t t = 0; t <= spec.num_periods; ++t) {
        const year_month_day ymd{day};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        panel.dates.emplace_back(buf);
        day += days{7};
        if (t == 0) continue;

        const double market = market_vol * gauss(rng);
        for (double& s : block_shock) s = block_vol * gauss(rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = drift[i] + loading[i] * market + block_shock[block_of[i]] + idio_vol * gauss(rng);
            panel.prices(t, i) = panel.prices(t - 1, i) * std::exp(r);
        }
    }
    return panel;
}

} // namespace locport
