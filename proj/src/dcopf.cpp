#include "pou/dcopf.hpp"

#include <cmath>
#include <set>
#include <string>

#include "pou/errors.hpp"

namespace pou {

Network::Network(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  std::set<int> ids;
  for (std::size_t b = 0; b < buses_.size(); ++b) {
    const Bus& bus = buses_[b];
    if (!ids.insert(bus.id).second) throw DomainError("Network: duplicate bus id " + std::to_string(bus.id));
    if (bus.generator) {
      const Generator& g = *bus.generator;
      if (!(g.cost_quadratic > 0.0)) {
        throw DomainError("Network: generator at bus " + std::to_string(bus.id) + " needs H_ii > 0");
      }
      if (g.p_min > g.p_max) throw DomainError("Network: p_min > p_max at bus " + std::to_string(bus.id));
      gen_buses_.push_back(b);
    }
    if (const auto* d = std::get_if<Distribution1D>(&bus.demand)) {
      if (d->kind() == DistKind::kDirac) continue;
      if (uncertain_bus_) throw DomainError("Network: at most one uncertain demand is supported");
      uncertain_bus_ = b;
    } else if (!std::isfinite(std::get<double>(bus.demand))) {
      throw DomainError("Network: non-finite demand at bus " + std::to_string(bus.id));
    }
  }
  if (gen_buses_.empty()) throw DomainError("Network: at least one generator is required");
  for (const Line& l : lines_) {
    if (!ids.contains(l.from) || !ids.contains(l.to)) throw DomainError("Network: line references unknown bus");
  }
}

const Distribution1D* Network::uncertain_demand() const {
  if (!uncertain_bus_) return nullptr;
  return &std::get<Distribution1D>(buses_[*uncertain_bus_].demand);
}

double Network::fixed_demand() const {
  double s = 0.0;
  for (std::size_t b = 0; b < buses_.size(); ++b) {
    if (uncertain_bus_ && *uncertain_bus_ == b) continue;
    const Demand& d = buses_[b].demand;
    s += std::holds_alternative<double>(d) ? std::get<double>(d) : std::get<Distribution1D>(d).location();
  }
  return s;
}

std::vector<double> Network::demand_realization(double uncertain_value) const {
  std::vector<double> out(buses_.size(), 0.0);
  for (std::size_t b = 0; b < buses_.size(); ++b) {
    const Demand& d = buses_[b].demand;
    if (uncertain_bus_ && *uncertain_bus_ == b) out[b] = uncertain_value;
    else out[b] = std::holds_alternative<double>(d) ? std::get<double>(d) : std::get<Distribution1D>(d).location();
  }
  return out;
}

PceVector Network::demand_pce(BasisNormalization norm) const {
  PceVector unc = uncertain_demand() ? pce_of_demand(*uncertain_demand(), norm)
                                     : pce_of_demand(Distribution1D::dirac(0.0), norm);
  DenseMatrix c(2, buses_.size());
  const auto fixed = demand_realization(0.0);
  for (std::size_t b = 0; b < buses_.size(); ++b) {
    if (uncertain_bus_ && *uncertain_bus_ == b) {
      c(0, b) = unc.coeff(0, 0);
      c(1, b) = unc.coeff(1, 0);
    } else {
      c(0, b) = fixed[b];
    }
  }
  return PceVector(unc.basis_ptr(), std::move(c));
}

Network Network::three_bus(double h11, double h22, double h1, double h2, double p1_max, Demand demand) {
  std::vector<Bus> buses(3);
  buses[0].id = 1;
  buses[0].generator = Generator{h11, h1, -kInf, p1_max};
  buses[1].id = 2;
  buses[1].generator = Generator{h22, h2, -kInf, kInf};
  buses[2].id = 3;
  buses[2].demand = std::move(demand);
  return Network(std::move(buses), {{1, 2, kInf}, {2, 3, kInf}, {1, 3, kInf}});
}

QpProblem build_qp(const Network& net, std::span<const double> demand_realization) {
  if (demand_realization.size() != net.buses().size()) {
    throw DomainError("build_qp: one demand value per bus is required");
  }
  QpProblem q;
  for (double d : demand_realization) {
    if (!std::isfinite(d)) throw DomainError("build_qp: non-finite demand");
    q.balance_rhs += d;
  }
  for (std::size_t g = 0; g < net.generator_count(); ++g) {
    const Generator& gen = net.generator(g);
    q.h_diag.push_back(gen.cost_quadratic);
    q.h_lin.push_back(gen.cost_linear);
    q.lower.push_back(gen.p_min);
    q.upper.push_back(gen.p_max);
  }
  return q;
}

std::vector<double> argmin(const Network& net, std::span<const double> demand_realization) {
  return solve_box_qp(build_qp(net, demand_realization)).primal;
}

ArgminCaseSplit ArgminCaseSplit::from_costs(double h11, double h22, double h1, double h2, double p1_max) {
  ArgminCaseSplit cs;
  cs.beta = (h1 - h2) / (h11 + h22);
  cs.gamma = h22 / (h11 + h22);
  cs.switch_point = std::isfinite(p1_max) ? (p1_max + cs.beta) / cs.gamma : kInf;
  return cs;
}

ArgminCaseSplit ArgminCaseSplit::from_network(const Network& net) {
  if (net.generator_count() != 2) throw UnsupportedTopology("case split needs exactly two generators");
  const Generator& g1 = net.generator(0);
  const Generator& g2 = net.generator(1);
  if (std::isfinite(g1.p_min) || std::isfinite(g2.p_min) || std::isfinite(g2.p_max)) {
    throw UnsupportedTopology("case split supports only an upper limit on the first generator");
  }
  return from_costs(g1.cost_quadratic, g2.cost_quadratic, g1.cost_linear, g2.cost_linear, g1.p_max);
}

std::vector<double> closed_form_argmin(const ArgminCaseSplit& cs, double p1_max, double demand) {
  if (-demand < cs.switch_point) {
    return {-cs.beta - cs.gamma * demand, cs.beta - (1.0 - cs.gamma) * demand};
  }
  return {p1_max, -(demand + p1_max)};
}

}  // namespace pou
