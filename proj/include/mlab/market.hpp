#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace mlab {

/// Raised for malformed inputs anywhere in the library.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MarketParams {
  std::size_t omega_count = 64;   // number of states
  double complexity = 1.0;        // instruments per state, N / omega
  double demand_mean = 0.0;
  double demand_variance = 1.0;
  double premium_mean = 0.0;
  double premium_variance = 0.0;
  double max_supply = 1.0;        // may be +infinity
  std::uint64_t seed = 0;

  std::size_t instrument_count() const;
  void validate() const;
};

/// Supplies of every instrument; kept separate from plain vectors so call
/// sites state which quantity they pass.
struct SupplyVector {
  std::vector<double> values;

  SupplyVector() = default;
  explicit SupplyVector(std::vector<double> v) : values(std::move(v)) {}
  static SupplyVector zeros(std::size_t n) { return SupplyVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

/// One disorder realization. Immutable after construction.
class MarketInstance {
 public:
  MarketInstance(std::vector<double> probabilities, std::vector<double> demand,
                 std::vector<double> payoffs_row_major, std::vector<double> premia,
                 double max_supply);

  std::size_t omega_count() const { return probabilities_.size(); }
  std::size_t instrument_count() const { return premia_.size(); }
  double max_supply() const { return max_supply_; }

  std::span<const double> probabilities() const { return probabilities_; }
  std::span<const double> demand() const { return demand_; }
  std::span<const double> premia() const { return premia_; }
  /// Full N x omega payoff matrix, row-major.
  std::span<const double> payoffs() const { return payoffs_; }
  /// Payoffs of instrument i across states.
  std::span<const double> instrument_payoffs(std::size_t i) const;
  /// Payoffs of every instrument in state w (transposed storage).
  std::span<const double> state_payoffs(std::size_t w) const;
  double payoff(std::size_t i, std::size_t w) const { return payoffs_[i * omega_count() + w]; }

  /// sum_w pi^w (a_i^w)^2, the curvature of H along coordinate i.
  double curvature(std::size_t i) const { return curvature_[i]; }

  bool in_box(const SupplyVector& s, double slack = 0.0) const;
  void check_supply_size(const SupplyVector& s) const;

  // Generation metadata; zero for hand-built instances.
  double complexity = 0.0;
  std::uint64_t seed = 0;

 private:
  std::vector<double> probabilities_;
  std::vector<double> demand_;
  std::vector<double> payoffs_;
  std::vector<double> payoffs_by_state_;
  std::vector<double> premia_;
  std::vector<double> curvature_;
  double max_supply_;
};

MarketInstance generate_market(const MarketParams& params);

/// r^w = d_0^w + sum_i s_i a_i^w.
std::vector<double> compute_returns(const MarketInstance& market, const SupplyVector& s);

/// u_i - ubar_i = -eps_i/omega - sum_w pi^w a_i^w r^w, i.e. -dH/ds_i.
double profit_gap(const MarketInstance& market, std::span<const double> returns, std::size_t i);

double expectation(std::span<const double> weights, std::span<const double> values);

nlohmann::json market_to_json(const MarketInstance& market);
MarketInstance market_from_json(const nlohmann::json& doc);

}  // namespace mlab
