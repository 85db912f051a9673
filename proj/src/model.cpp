#include "cppa/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace cppa {
namespace {

std::string tag(const char* prefix, int id) { return std::string(prefix) + std::to_string(id); }

// Width of each bid piece over [0, pmax]; the last piece reaches pmax.
std::vector<double> segment_widths(const std::vector<BidSegment>& segments, double pmax) {
  std::vector<double> widths;
  double start = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const bool last = i + 1 == segments.size();
    const double end = last ? std::max(segments[i].breakpoint, pmax) : segments[i].breakpoint;
    const double lo = std::min(start, pmax);
    const double hi = std::min(end, pmax);
    widths.push_back(std::max(0.0, hi - lo));
    start = end;
  }
  return widths;
}

void check_bid_shape(const std::vector<BidSegment>& segments, bool convex, const std::string& who) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (convex && segments[i].price < segments[i - 1].price) {
      throw ModelError(who + ": non-convex cost segments");
    }
    if (!convex && segments[i].price > segments[i - 1].price) {
      throw ModelError(who + ": non-concave benefit segments");
    }
  }
}

}  // namespace

const char* to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::JabrRotated:
      return "jabr";
    case ConeKind::CurrentLimitFrom:
      return "current_from";
    case ConeKind::CurrentLimitTo:
      return "current_to";
  }
  return "?";
}

ConeKind cone_kind_from_string(const std::string& text) {
  if (text == "jabr") return ConeKind::JabrRotated;
  if (text == "current_from") return ConeKind::CurrentLimitFrom;
  if (text == "current_to") return ConeKind::CurrentLimitTo;
  throw ModelError("unknown cone kind '" + text + "'");
}

int ModelIR::add_variable(std::string name, double lower, double upper, double objective, bool binary) {
  variables.push_back({std::move(name), lower, upper, objective, binary});
  return static_cast<int>(variables.size()) - 1;
}

int ModelIR::add_row(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
  rows.push_back({std::move(name), std::move(terms), sense, rhs});
  return static_cast<int>(rows.size()) - 1;
}

std::size_t ModelIR::binary_count() const {
  return static_cast<std::size_t>(
      std::count_if(variables.begin(), variables.end(), [](const Variable& v) { return v.binary; }));
}

void ModelIR::validate() const {
  const int n = static_cast<int>(variables.size());
  for (const auto& v : variables) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || std::isnan(v.objective)) {
      throw ModelError("variable " + v.name + ": NaN in bounds or objective");
    }
  }
  for (const auto& r : rows) {
    for (const auto& t : r.terms) {
      if (t.var < 0 || t.var >= n) throw ModelError("row " + r.name + " references missing variable");
      if (!std::isfinite(t.coef)) throw ModelError("row " + r.name + " has a non-finite coefficient");
    }
    if (!std::isfinite(r.rhs)) throw ModelError("row " + r.name + " has a non-finite rhs");
  }
  for (const auto& c : cones) {
    for (int i = 0; i < c.arity(); ++i) {
      if (c.vars[static_cast<std::size_t>(i)] < 0 || c.vars[static_cast<std::size_t>(i)] >= n) {
        throw ModelError("cone on branch " + std::to_string(c.branch_id) + " references missing variable");
      }
    }
    if (c.kind != ConeKind::JabrRotated && !(c.multiplier > 0.0)) {
      throw ModelError("current-limit cone on branch " + std::to_string(c.branch_id) + " needs a positive multiplier");
    }
  }
  for (const auto& b : index.buses) {
    if (b.p_balance < 0) throw ModelError("bus without an active balance row");
    if (formulation == Formulation::CutPlane && b.q_balance < 0) {
      throw ModelError("bus without a reactive balance row");
    }
  }
}

double evaluate_bid(const std::vector<BidSegment>& segments, double pmax, double p) {
  const auto widths = segment_widths(segments, pmax);
  double start = 0.0, total = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    total += segments[i].price * std::clamp(p - start, 0.0, widths[i]);
    start += widths[i];
  }
  return total;
}

GeneratorVars build_generator_block(const Generator& gen, double base_mva, bool reactive, ModelIR& model) {
  const std::string who = tag("g", gen.id);
  check_bid_shape(gen.cost_segments, true, "generator " + std::to_string(gen.id));
  GeneratorVars v;
  v.p = model.add_variable(who + "_p", 0.0, std::max(0.0, gen.pmax));
  if (reactive) v.q = model.add_variable(who + "_q", std::min(0.0, gen.qmin), std::max(0.0, gen.qmax));
  v.on = model.add_variable(who + "_on", 0.0, 1.0, -gen.no_load_cost, true);
  v.su = model.add_variable(who + "_su", 0.0, 1.0, -gen.startup_cost, true);
  v.sd = model.add_variable(who + "_sd", 0.0, 1.0, -gen.shutdown_cost, true);
  const auto widths = segment_widths(gen.cost_segments, gen.pmax);
  std::vector<Term> pwl{{v.p, 1.0}};
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int seg = model.add_variable(who + "_seg" + std::to_string(i), 0.0, widths[i],
                                       -gen.cost_segments[i].price * base_mva);
    v.segments.push_back(seg);
    pwl.push_back({seg, -1.0});
  }
  model.add_row(who + "_pwl", std::move(pwl), Sense::Equal, 0.0);
  model.add_row(who + "_pmax", {{v.p, 1.0}, {v.on, -gen.pmax}}, Sense::LessEqual, 0.0);
  model.add_row(who + "_pmin", {{v.p, 1.0}, {v.on, -gen.pmin}}, Sense::GreaterEqual, 0.0);
  if (reactive) {
    model.add_row(who + "_qmax", {{v.q, 1.0}, {v.on, -gen.qmax}}, Sense::LessEqual, 0.0);
    model.add_row(who + "_qmin", {{v.q, 1.0}, {v.on, -gen.qmin}}, Sense::GreaterEqual, 0.0);
  }
  model.add_row(who + "_link", {{v.su, 1.0}, {v.sd, -1.0}, {v.on, -1.0}}, Sense::Equal,
                gen.initial_on ? -1.0 : 0.0);
  model.add_row(who + "_susd", {{v.su, 1.0}, {v.sd, 1.0}}, Sense::LessEqual, 1.0);
  return v;
}

LoadVars build_load_block(const Load& load, double base_mva, bool reactive, ModelIR& model) {
  const std::string who = tag("l", load.id);
  check_bid_shape(load.benefit_segments, false, "load " + std::to_string(load.id));
  LoadVars v;
  v.p = model.add_variable(who + "_p", 0.0, load.pmax);
  if (reactive) {
    const double gamma = load.power_factor_ratio;
    v.q = gamma == 0.0 ? model.add_variable(who + "_q", 0.0, 0.0) : model.add_variable(who + "_q", -kInf, kInf);
  }
  const auto widths = segment_widths(load.benefit_segments, load.pmax);
  std::vector<Term> pwl{{v.p, 1.0}};
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int seg = model.add_variable(who + "_seg" + std::to_string(i), 0.0, widths[i],
                                       load.benefit_segments[i].price * base_mva);
    v.segments.push_back(seg);
    pwl.push_back({seg, -1.0});
  }
  model.add_row(who + "_pwl", std::move(pwl), Sense::Equal, 0.0);
  if (reactive) {
    model.add_row(who + "_pf", {{v.q, 1.0}, {v.p, -load.power_factor_ratio}}, Sense::Equal, 0.0);
  }
  return v;
}

namespace {

void attach_agents(const CaseData& data, bool reactive, ModelIR& model) {
  for (const auto& g : data.generators) {
    auto v = build_generator_block(g, data.base_mva, reactive, model);
    const auto& bus = model.index.buses[data.bus_index(g.bus)];
    model.rows[static_cast<std::size_t>(bus.p_balance)].terms.push_back({v.p, -1.0});
    if (reactive) model.rows[static_cast<std::size_t>(bus.q_balance)].terms.push_back({v.q, -1.0});
    model.index.generators.push_back(std::move(v));
  }
  for (const auto& l : data.loads) {
    auto v = build_load_block(l, data.base_mva, reactive, model);
    const auto& bus = model.index.buses[data.bus_index(l.bus)];
    model.rows[static_cast<std::size_t>(bus.p_balance)].terms.push_back({v.p, 1.0});
    if (reactive) model.rows[static_cast<std::size_t>(bus.q_balance)].terms.push_back({v.q, 1.0});
    model.index.loads.push_back(std::move(v));
  }
}

void require_connected(const CaseData& data) {
  if (data.islanded) throw ModelError("case '" + data.scenario_name + "' is islanded");
}

}  // namespace

ModelIR build_cp_welfare(const CaseData& data) {
  require_connected(data);
  ModelIR model;
  model.formulation = Formulation::CutPlane;
  model.base_mva = data.base_mva;

  for (const auto& b : data.buses) {
    BusVars v;
    v.v2 = model.add_variable(tag("v2_", b.id), b.vmin * b.vmin, b.vmax * b.vmax);
    model.index.buses.push_back(v);
  }
  // Balance rows: outgoing flows + consumption - production = 0. The dual of
  // each row is the marginal welfare of injecting at the bus.
  for (std::size_t k = 0; k < data.buses.size(); ++k) {
    model.index.buses[k].p_balance = model.add_row(tag("bal_p_", data.buses[k].id), {}, Sense::Equal, 0.0);
    model.index.buses[k].q_balance = model.add_row(tag("bal_q_", data.buses[k].id), {}, Sense::Equal, 0.0);
  }

  for (const auto& br : data.branches) {
    BranchVars v;
    if (br.in_service) {
      const std::size_t k = data.bus_index(br.from_bus), m = data.bus_index(br.to_bus);
      const double vk = data.buses[k].vmax, vm = data.buses[m].vmax;
      const std::string who = tag("br", br.id);
      const int v2k = model.index.buses[k].v2, v2m = model.index.buses[m].v2;
      // c >= 0 holds for every AC point since the angle limit is below pi/2.
      v.c = model.add_variable(who + "_c", 0.0, vk * vm);
      v.s = model.add_variable(who + "_s", -vk * vm, vk * vm);
      v.p_from = model.add_variable(who + "_pf", -kInf, kInf);
      v.q_from = model.add_variable(who + "_qf", -kInf, kInf);
      v.p_to = model.add_variable(who + "_pt", -kInf, kInf);
      v.q_to = model.add_variable(who + "_qt", -kInf, kInf);
      const Admittance& y = br.y;
      model.add_row(who + "_pf_def", {{v.p_from, 1.0}, {v2k, -y.g_kk}, {v.c, -y.g_km}, {v.s, -y.b_km}},
                    Sense::Equal, 0.0);
      model.add_row(who + "_pt_def", {{v.p_to, 1.0}, {v2m, -y.g_mm}, {v.c, -y.g_mk}, {v.s, y.b_mk}},
                    Sense::Equal, 0.0);
      model.add_row(who + "_qf_def", {{v.q_from, 1.0}, {v2k, y.b_kk}, {v.c, y.b_km}, {v.s, -y.g_km}},
                    Sense::Equal, 0.0);
      model.add_row(who + "_qt_def", {{v.q_to, 1.0}, {v2m, y.b_mm}, {v.c, y.b_mk}, {v.s, y.g_mk}},
                    Sense::Equal, 0.0);
      auto& rows = model.rows;
      rows[static_cast<std::size_t>(model.index.buses[k].p_balance)].terms.push_back({v.p_from, 1.0});
      rows[static_cast<std::size_t>(model.index.buses[k].q_balance)].terms.push_back({v.q_from, 1.0});
      rows[static_cast<std::size_t>(model.index.buses[m].p_balance)].terms.push_back({v.p_to, 1.0});
      rows[static_cast<std::size_t>(model.index.buses[m].q_balance)].terms.push_back({v.q_to, 1.0});

      model.cones.push_back({ConeKind::JabrRotated, br.id, {v.c, v.s, v2k, v2m}, 1.0});
      model.cones.push_back({ConeKind::CurrentLimitFrom, br.id, {v.p_from, v.q_from, v2k, -1}, br.current_limit_sq});
      model.cones.push_back({ConeKind::CurrentLimitTo, br.id, {v.p_to, v.q_to, v2m, -1}, br.current_limit_sq});
    }
    model.index.branches.push_back(v);
  }

  attach_agents(data, true, model);
  model.validate();
  return model;
}

ModelIR build_dc_welfare(const CaseData& data) {
  require_connected(data);
  ModelIR model;
  model.formulation = Formulation::DC;
  model.base_mva = data.base_mva;

  // Reference bus: lowest id, angle fixed at zero (no variable).
  for (std::size_t k = 0; k < data.buses.size(); ++k) {
    BusVars v;
    if (k > 0) v.theta = model.add_variable(tag("theta_", data.buses[k].id), -kInf, kInf);
    model.index.buses.push_back(v);
  }
  for (std::size_t k = 0; k < data.buses.size(); ++k) {
    model.index.buses[k].p_balance = model.add_row(tag("bal_p_", data.buses[k].id), {}, Sense::Equal, 0.0);
  }

  for (const auto& br : data.branches) {
    BranchVars v;
    if (br.in_service) {
      const std::size_t k = data.bus_index(br.from_bus), m = data.bus_index(br.to_bus);
      const std::string who = tag("br", br.id);
      const double limit = std::sqrt(br.current_limit_sq);
      const double susceptance = 1.0 / (br.x * br.tap);
      v.p_from = model.add_variable(who + "_p", -limit, limit);

      std::vector<Term> flow{{v.p_from, 1.0}};
      std::vector<Term> angle;
      if (const int tk = model.index.buses[k].theta; tk >= 0) {
        flow.push_back({tk, -susceptance});
        angle.push_back({tk, 1.0});
      }
      if (const int tm = model.index.buses[m].theta; tm >= 0) {
        flow.push_back({tm, susceptance});
        angle.push_back({tm, -1.0});
      }
      model.add_row(who + "_flow", std::move(flow), Sense::Equal, -br.shift * susceptance);
      model.add_row(who + "_ang_hi", angle, Sense::LessEqual, br.max_angle_diff);
      model.add_row(who + "_ang_lo", std::move(angle), Sense::GreaterEqual, -br.max_angle_diff);

      model.rows[static_cast<std::size_t>(model.index.buses[k].p_balance)].terms.push_back({v.p_from, 1.0});
      model.rows[static_cast<std::size_t>(model.index.buses[m].p_balance)].terms.push_back({v.p_from, -1.0});
    }
    model.index.branches.push_back(v);
  }

  attach_agents(data, false, model);
  model.validate();
  return model;
}

void write_lp(const ModelIR& model, std::ostream& out) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  auto name = [&](int var) -> const std::string& { return model.variables[static_cast<std::size_t>(var)].name; };
  auto write_terms = [&](const std::vector<Term>& terms) {
    if (terms.empty()) {
      out << " 0 " << name(0);
      return;
    }
    for (const auto& t : terms) {
      out << (t.coef < 0 ? " - " : " + ") << std::abs(t.coef) << ' ' << name(t.var);
    }
  };

  out << "\\ cppa welfare model\nMaximize\n obj:";
  std::vector<Term> obj;
  for (std::size_t j = 0; j < model.variables.size(); ++j) {
    if (model.variables[j].objective != 0.0) obj.push_back({static_cast<int>(j), model.variables[j].objective});
  }
  write_terms(obj);
  out << "\nSubject To\n";
  for (const auto& r : model.rows) {
    out << ' ' << r.name << ':';
    write_terms(r.terms);
    out << (r.sense == Sense::LessEqual ? " <= " : r.sense == Sense::Equal ? " = " : " >= ") << r.rhs << '\n';
  }
  out << "Bounds\n";
  for (const auto& v : model.variables) {
    if (v.lower == -kInf && v.upper == kInf) {
      out << ' ' << v.name << " free\n";
    } else {
      out << ' ';
      if (v.lower == -kInf) {
        out << "-inf";
      } else {
        out << v.lower;
      }
      out << " <= " << v.name << " <= ";
      if (v.upper == kInf) {
        out << "+inf";
      } else {
        out << v.upper;
      }
      out << '\n';
    }
  }
  if (model.binary_count() > 0) {
    out << "Binaries\n";
    for (const auto& v : model.variables) {
      if (v.binary) out << ' ' << v.name << '\n';
    }
  }
  out << "End\n";
  out.precision(old_precision);
}

}  // namespace cppa
