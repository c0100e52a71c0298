#pragma once

// DC-OPF model layer. Demand is counted negative: a load of 1.1 p.u. is a
// demand value of -1.1, and generation balances it, Σ p^g + Σ p^d = 0.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pou/linalg_qp.hpp"
#include "pou/pce.hpp"
#include "pou/stochastics.hpp"

namespace pou {

struct Generator {
  double cost_quadratic = 0.0;  // H_ii
  double cost_linear = 0.0;     // h_i
  double p_min = -kInf;
  double p_max = kInf;
};

using Demand = std::variant<double, Distribution1D>;

struct Bus {
  int id = 0;
  std::optional<Generator> generator;
  Demand demand = 0.0;
};

/// Accepted for completeness; flow limits are not enforced by the DC model here.
struct Line {
  int from = 0;
  int to = 0;
  double limit = kInf;
};

class Network {
 public:
  Network() = default;
  Network(std::vector<Bus> buses, std::vector<Line> lines = {});

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  /// Bus positions that carry a generator, in bus order.
  const std::vector<std::size_t>& generator_buses() const { return gen_buses_; }
  std::size_t generator_count() const { return gen_buses_.size(); }
  const Generator& generator(std::size_t g) const { return *buses_[gen_buses_[g]].generator; }
  /// Position of the single uncertain demand bus, if any.
  std::optional<std::size_t> uncertain_bus() const { return uncertain_bus_; }
  const Distribution1D* uncertain_demand() const;
  /// Sum of all fixed (deterministic) demands.
  double fixed_demand() const;
  /// Per-bus demand with the uncertain bus at `uncertain_value`.
  std::vector<double> demand_realization(double uncertain_value) const;
  /// Per-bus demand expansion (columns = buses) in the uncertain demand's basis.
  PceVector demand_pce(BasisNormalization norm = BasisNormalization::kClassical) const;

  /// The three-bus reference network: generators at buses 1 and 2, load at bus 3.
  static Network three_bus(double h11, double h22, double h1, double h2, double p1_max,
                           Demand demand);

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<std::size_t> gen_buses_;
  std::optional<std::size_t> uncertain_bus_;
};

QpProblem build_qp(const Network& net, std::span<const double> demand_realization);

/// Per-generator optimal dispatch for one demand realization (per bus).
std::vector<double> argmin(const Network& net, std::span<const double> demand_realization);

/// Closed-form two-generator argmin with a single upper limit on generator 1.
struct ArgminCaseSplit {
  double beta = 0.0;
  double gamma = 0.0;
  double switch_point = kInf;  // -p^d at which generator 1 saturates

  static ArgminCaseSplit from_costs(double h11, double h22, double h1, double h2, double p1_max);
  /// Throws UnsupportedTopology unless the network has exactly two generators.
  static ArgminCaseSplit from_network(const Network& net);
};

std::vector<double> closed_form_argmin(const ArgminCaseSplit& cs, double p1_max, double demand);

}  // namespace pou
