// MATPOWER .m subset reader: mpc.baseMVA, mpc.bus, mpc.branch, mpc.gen and
// mpc.gencost. Loads are synthesized from bus Pd/Qd with a single
// value-of-lost-load benefit segment.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "cppa/netio.hpp"

namespace cppa {
namespace {

using Matrix = std::vector<std::vector<double>>;

// Angle limit used when the file leaves angmin/angmax unconstrained.
constexpr double kDefaultAngleLimitDeg = 60.0;
// Apparent-power cap (p.u.) when rateA is zero, i.e. unlimited.
constexpr double kUnlimitedRate = 100.0;

std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char ch : text) {
    if (ch == '%') in_comment = true;
    if (ch == '\n') in_comment = false;
    if (!in_comment) out.push_back(ch);
  }
  return out;
}

Matrix read_matrix(const std::string& text, const std::string& name, bool mandatory) {
  const std::regex start("mpc\\." + name + "\\s*=\\s*\\[");
  std::smatch m;
  if (!std::regex_search(text, m, start)) {
    if (mandatory) throw CaseError("MATPOWER: missing mpc." + name);
    return {};
  }
  const auto begin = static_cast<std::size_t>(m.position(0) + m.length(0));
  const auto end = text.find(']', begin);
  if (end == std::string::npos) throw CaseError("MATPOWER: unterminated mpc." + name);
  Matrix rows;
  std::string body = text.substr(begin, end - begin);
  std::replace(body.begin(), body.end(), '\n', ';');
  std::stringstream rows_in(body);
  std::string line;
  while (std::getline(rows_in, line, ';')) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::stringstream cells(line);
    std::vector<double> row;
    std::string cell;
    while (cells >> cell) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw CaseError("MATPOWER: bad number '" + cell + "' in mpc." + name);
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

double read_scalar(const std::string& text, const std::string& name) {
  const std::regex pat("mpc\\." + name + "\\s*=\\s*([-+0-9.eE]+)");
  std::smatch m;
  if (!std::regex_search(text, m, pat)) throw CaseError("MATPOWER: missing mpc." + name);
  return std::stod(m[1].str());
}

void need_columns(const std::vector<double>& row, std::size_t n, const std::string& what) {
  if (row.size() < n) {
    throw CaseError("MATPOWER: " + what + " row has " + std::to_string(row.size()) + " columns, need " +
                    std::to_string(n));
  }
}

// Convex PWL bid in p.u. from a gencost row. Returns segments and the cost
// at zero output (no-load cost).
std::pair<std::vector<BidSegment>, double> convert_cost(const std::vector<double>& row, double pmax_mw,
                                                        double base, int gen_id) {
  need_columns(row, 4, "gencost");
  const int model = static_cast<int>(row[0]);
  const int n = static_cast<int>(row[3]);
  std::vector<BidSegment> segs;
  double no_load = 0.0;
  const double top = std::max(pmax_mw, 1e-6);
  if (model == 1) {
    need_columns(row, 4 + 2 * static_cast<std::size_t>(n), "gencost");
    if (n < 2) throw CaseError("MATPOWER: generator " + std::to_string(gen_id) + " PWL cost needs >= 2 points");
    for (int i = 1; i < n; ++i) {
      const double p0 = row[4 + 2 * (i - 1)], f0 = row[5 + 2 * (i - 1)];
      const double p1 = row[4 + 2 * i], f1 = row[5 + 2 * i];
      if (p1 <= p0) throw CaseError("MATPOWER: generator " + std::to_string(gen_id) + " PWL points not increasing");
      segs.push_back({p1 / base, (f1 - f0) / (p1 - p0)});
      if (i == 1) no_load = f0 - segs.back().price * p0;
    }
    // Points below zero output carry no quantity; keep the pieces above it.
    segs.erase(std::remove_if(segs.begin(), segs.end(), [](const BidSegment& s) { return s.breakpoint <= 0.0; }),
               segs.end());
    if (segs.empty()) throw CaseError("MATPOWER: generator " + std::to_string(gen_id) + " PWL cost has no positive range");
  } else if (model == 2) {
    need_columns(row, 4 + static_cast<std::size_t>(n), "gencost");
    std::vector<double> coef(row.begin() + 4, row.begin() + 4 + n);  // highest order first
    auto eval = [&](double p) {
      double v = 0.0;
      for (double c : coef) v = v * p + c;
      return v;
    };
    if (n > 3) throw CaseError("MATPOWER: generator " + std::to_string(gen_id) + " polynomial cost above quadratic");
    no_load = eval(0.0);
    constexpr int kPieces = 3;
    for (int i = 0; i < kPieces; ++i) {
      const double a = top * i / kPieces, b = top * (i + 1) / kPieces;
      segs.push_back({b / base, (eval(b) - eval(a)) / (b - a)});
    }
  } else {
    throw CaseError("MATPOWER: unknown gencost model " + std::to_string(model));
  }
  return {segs, no_load};
}

}  // namespace

CaseData parse_matpower(const std::string& raw, const ParseOptions& options) {
  const std::string text = strip_comments(raw);
  CaseData out;
  out.base_mva = read_scalar(text, "baseMVA");
  const double base = out.base_mva;
  const Matrix bus = read_matrix(text, "bus", true);
  const Matrix gen = read_matrix(text, "gen", true);
  const Matrix branch = read_matrix(text, "branch", true);
  const Matrix gencost = read_matrix(text, "gencost", true);
  if (gencost.size() < gen.size()) throw CaseError("MATPOWER: fewer gencost rows than generators");

  for (const auto& row : bus) {
    need_columns(row, 13, "bus");
    const int id = static_cast<int>(row[0]);
    out.buses.push_back({id, row[12], row[11]});
    const double pd = row[2], qd = row[3];
    if (pd > 0.0) {
      Load load;
      load.id = id;
      load.bus = id;
      load.pmax = pd / base;
      load.benefit_segments = {{load.pmax, options.voll}};
      load.power_factor_ratio = qd / pd;
      out.loads.push_back(load);
    }
  }

  int branch_id = 1;
  for (const auto& row : branch) {
    need_columns(row, 11, "branch");
    Branch br;
    br.id = branch_id++;
    br.from_bus = static_cast<int>(row[0]);
    br.to_bus = static_cast<int>(row[1]);
    br.r = row[2];
    br.x = row[3];
    br.b_c = row[4];
    const double rate = row[5] > 0.0 ? row[5] / base : kUnlimitedRate;
    br.current_limit_sq = rate * rate;
    br.tap = row[8] == 0.0 ? 1.0 : row[8];
    br.shift = row[9] * std::numbers::pi / 180.0;
    br.in_service = row[10] != 0.0;
    double limit_deg = kDefaultAngleLimitDeg;
    if (row.size() >= 13) {
      const double lo = std::abs(row[11]), hi = std::abs(row[12]);
      double tightest = 0.0;
      if (lo > 0.0 && lo < 90.0) tightest = lo;
      if (hi > 0.0 && hi < 90.0) tightest = tightest > 0.0 ? std::min(tightest, hi) : hi;
      if (tightest > 0.0) limit_deg = tightest;
    }
    br.max_angle_diff = limit_deg * std::numbers::pi / 180.0;
    out.branches.push_back(br);
  }

  int gen_id = 1;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const auto& row = gen[i];
    need_columns(row, 10, "gen");
    const int id = gen_id++;
    if (row[7] <= 0.0) continue;
    Generator g;
    g.id = id;
    g.bus = static_cast<int>(row[0]);
    g.qmax = row[3] / base;
    g.qmin = row[4] / base;
    g.pmax = row[8] / base;
    g.pmin = std::max(0.0, row[9] / base);
    g.initial_on = true;
    auto [segs, no_load] = convert_cost(gencost[i], row[8], base, id);
    g.cost_segments = std::move(segs);
    g.no_load_cost = no_load;
    g.startup_cost = gencost[i][1];
    g.shutdown_cost = gencost[i][2];
    out.generators.push_back(std::move(g));
  }
  finalize_case(out);
  return out;
}

}  // namespace cppa
