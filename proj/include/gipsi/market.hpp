#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gipsi {

/// Raised when a value falls outside the domain of its type.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Behavioral couplings and response times of the market.
struct ModelParams {
    double alpha = 0.0;  ///< inverse price elasticity
    double beta = 0.0;   ///< income elasticity of demand (rashness)
    double tau_a = 1.0;  ///< market price response time
    double tau_b = 1.0;  ///< investor portfolio response time

    double gamma() const { return alpha * beta; }

    /// Throws DomainError naming the offending field.
    void validate() const;
};

/// Dense row-major matrix, rows are investors and columns are assets.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Weighted bipartite investor-asset network at rest.
struct MarketNetwork {
    std::size_t n_investors = 0;
    std::size_t n_assets = 0;
    Matrix holdings;              ///< A(i, mu): shares of asset mu held by investor i
    std::vector<double> prices;   ///< p(mu), normalized to 1 at construction
    std::vector<double> equities; ///< E(i)

    /// Checks shapes and value domains. Every node must have at least one edge.
    void validate() const;

    bool operator==(const MarketNetwork&) const = default;
};

/// All dynamical variables at one instant.
struct MarketState {
    double t = 0.0;
    Matrix holdings;
    Matrix holdings_velocity;
    std::vector<double> prices;
    std::vector<double> returns;
    std::vector<double> equities;
    /// Engine-reported dE/dt at this instant (the right-hand side of the equity equation).
    std::vector<double> equity_rate;
    std::vector<bool> alive;

    std::size_t n_investors() const { return equities.size(); }
    std::size_t n_assets() const { return prices.size(); }

    /// Shape consistency only; values are not checked.
    void check_shape() const;

    bool operator==(const MarketState&) const = default;
};

struct ShockSpec {
    std::size_t investor = 0;
    double magnitude = 0.0; ///< fractional equity jump f0, must be > -1
};

struct SyntheticNetworkSpec {
    std::size_t n_investors = 1;
    std::size_t n_assets = 1;
    double density = 1.0;
    double weight_scale = 1.0;
    double leverage = 1.0;
    std::uint64_t seed = 0;
    /// Every placed edge gets exactly weight_scale instead of a uniform draw.
    bool unit_weights = false;
};

/// Random bipartite network with Bernoulli(density) edges and equities set from the leverage ratio.
/// Isolated investors or assets get one uniformly random edge each.
MarketNetwork build_synthetic_network(const SyntheticNetworkSpec& spec);

/// The rescaled one-investor one-asset system with A = p = E = 1.
MarketNetwork mean_field_network();

/// State right after a delta shock at t = 0.
///
/// The shocked investor's equity jumps to E (1 + f0) and its holdings acquire the
/// velocity (beta / tau_b) A ln(1 + f0). Every other velocity and all returns start at zero.
MarketState apply_shock(const MarketNetwork& network, const ShockSpec& shock, const ModelParams& params);

/// Copy of the network as a state at rest (no shock, all velocities zero).
MarketState state_at_rest(const MarketNetwork& network);

/// dE_i/dt - sum_mu A_{i mu} u_mu - f_i for each investor; dead investors report 0.
std::vector<double> equity_bookkeeping_residual(const MarketState& state,
                                                std::span<const double> external_force);

} // namespace gipsi
