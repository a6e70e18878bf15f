#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "cpop/opf.hpp"

namespace cpop {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\'') quoted = !quoted;
    if (s[i] == '%' && !quoted) return s.substr(0, i);
  }
  return s;
}

double to_number(const std::string& tok, int line, const std::string& where) {
  const char* b = tok.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0' || std::isnan(v))
    throw ParseError("line " + std::to_string(line) + ", " + where + ": '" + tok + "' is not a number");
  return v;
}

int to_int(double v, int line, const std::string& where) {
  if (v != std::floor(v) || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ", " + where + ": expected an integer");
  return static_cast<int>(v);
}

struct Row {
  int line = 0;
  std::vector<double> v;
};

struct Table {
  std::string name;
  int line = 0;
  std::vector<Row> rows;
};

const char* kBusCols[] = {"bus_i", "type", "Pd", "Qd", "Gs", "Bs", "area", "Vm", "Va", "baseKV", "zone", "Vmax", "Vmin"};
const char* kGenCols[] = {"bus", "Pg", "Qg", "Qmax", "Qmin", "Vg", "mBase", "status", "Pmax", "Pmin"};
const char* kBranchCols[] = {"fbus", "tbus", "r", "x", "b", "rateA", "rateB", "rateC", "ratio", "angle", "status"};

void check_columns(const Table& t, size_t need, PowerNetwork& net) {
  bool extra = false;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].v.size() < need)
      throw ParseError("line " + std::to_string(t.rows[r].line) + ", mpc." + t.name + " row " + std::to_string(r + 1) +
                       ": expected at least " + std::to_string(need) + " columns, found " +
                       std::to_string(t.rows[r].v.size()));
    extra |= t.rows[r].v.size() > need;
  }
  if (extra) net.warnings.push_back("mpc." + t.name + ": columns beyond " + std::to_string(need) + " ignored");
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  return v;
}

double num_from(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "Inf" || s == "inf") return kInf;
    if (s == "-Inf" || s == "-inf") return -kInf;
    throw ParseError("JSON case: '" + s + "' is not a number");
  }
  if (!j.is_number()) throw ParseError("JSON case: expected a number, found " + j.dump());
  return j.get<double>();
}

}  // namespace

PowerNetwork parse_matpower(std::istream& in, const std::string& name) {
  PowerNetwork net;
  net.name = name;
  std::vector<Table> tables;
  Table* open = nullptr;
  std::string raw;
  int lineno = 0;
  bool have_base = false;
  static const std::regex assign(R"(^mpc\.(\w+)\s*=\s*(.*)$)");
  static const std::regex function(R"(^function\s+(\w+)\s*=\s*(\w+))");

  static const std::set<std::string> numeric{"bus", "gen", "branch", "gencost"};
  char closer = ']';
  auto add_rows = [&](const std::string& body, int line) {
    if (!numeric.count(open->name)) return;  // contents of other sections are not interpreted
    // Rows end at ';' or at the end of the physical line.
    std::string chunk;
    std::stringstream ss(body);
    while (std::getline(ss, chunk, ';')) {
      std::stringstream toks(chunk);
      std::string tok;
      Row row;
      row.line = line;
      int field = 0;
      while (toks >> tok) {
        ++field;
        row.v.push_back(to_number(tok, line, "mpc." + open->name + " field " + std::to_string(field)));
      }
      if (!row.v.empty()) open->rows.push_back(std::move(row));
    }
  };

  while (std::getline(in, raw)) {
    ++lineno;
    std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (open) {
      const auto close = s.find(closer);
      add_rows(s.substr(0, close), lineno);
      if (close != std::string::npos) open = nullptr;
      continue;
    }
    std::smatch m;
    if (std::regex_search(s, m, function)) {
      net.name = m[2];
      continue;
    }
    if (!std::regex_match(s, m, assign)) {
      throw ParseError("line " + std::to_string(lineno) + ": unrecognized statement '" + s + "'");
    }
    const std::string field = m[1];
    std::string rhs = trim(m[2]);
    if (!rhs.empty() && (rhs[0] == '[' || rhs[0] == '{')) {
      closer = rhs[0] == '[' ? ']' : '}';
      tables.push_back({field, lineno, {}});
      open = &tables.back();
      rhs = rhs.substr(1);
      const auto close = rhs.find(closer);
      add_rows(rhs.substr(0, close), lineno);
      if (close != std::string::npos) open = nullptr;
      continue;
    }
    if (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
    rhs = trim(rhs);
    if (field == "baseMVA") {
      net.base_mva = to_number(rhs, lineno, "mpc.baseMVA");
      have_base = true;
    } else if (field == "version") {
      if (rhs != "'2'") net.warnings.push_back("mpc.version " + rhs + " read with version 2 column layout");
    } else {
      net.warnings.push_back("mpc." + field + " ignored (line " + std::to_string(lineno) + ")");
    }
  }
  if (open) throw ParseError("line " + std::to_string(open->line) + ": mpc." + open->name + " is not closed");
  if (!have_base) throw ParseError("mpc.baseMVA missing");

  const Table* bus = nullptr;
  const Table* gen = nullptr;
  const Table* branch = nullptr;
  const Table* gencost = nullptr;
  for (const auto& t : tables) {
    if (t.name == "bus") bus = &t;
    else if (t.name == "gen") gen = &t;
    else if (t.name == "branch") branch = &t;
    else if (t.name == "gencost") gencost = &t;
    else net.warnings.push_back("unknown section mpc." + t.name + " ignored (line " + std::to_string(t.line) + ")");
  }
  if (!bus) throw ParseError("mpc.bus missing");
  if (!branch) throw ParseError("mpc.branch missing");

  check_columns(*bus, std::size(kBusCols), net);
  for (const auto& r : bus->rows) {
    Bus b;
    const auto& v = r.v;
    b.id = to_int(v[0], r.line, "mpc.bus bus_i");
    b.type = to_int(v[1], r.line, "mpc.bus type");
    b.pd = v[2];
    b.qd = v[3];
    b.gs = v[4];
    b.bs = v[5];
    b.area = to_int(v[6], r.line, "mpc.bus area");
    b.vm = v[7];
    b.va = v[8];
    b.base_kv = v[9];
    b.zone = to_int(v[10], r.line, "mpc.bus zone");
    b.vmax = v[11];
    b.vmin = v[12];
    net.buses.push_back(b);
  }
  if (gen) {
    check_columns(*gen, std::size(kGenCols), net);
    for (const auto& r : gen->rows) {
      Generator g;
      const auto& v = r.v;
      g.bus = to_int(v[0], r.line, "mpc.gen bus");
      g.pg = v[1];
      g.qg = v[2];
      g.qmax = v[3];
      g.qmin = v[4];
      g.vg = v[5];
      g.mbase = v[6];
      g.status = to_int(v[7], r.line, "mpc.gen status");
      g.pmax = v[8];
      g.pmin = v[9];
      net.gens.push_back(g);
    }
  }
  check_columns(*branch, std::size(kBranchCols), net);
  for (const auto& r : branch->rows) {
    Branch b;
    const auto& v = r.v;
    b.from = to_int(v[0], r.line, "mpc.branch fbus");
    b.to = to_int(v[1], r.line, "mpc.branch tbus");
    b.r = v[2];
    b.x = v[3];
    b.b = v[4];
    b.rate_a = v[5];
    b.rate_b = v[6];
    b.rate_c = v[7];
    b.ratio = v[8];
    b.angle = v[9];
    b.status = to_int(v[10], r.line, "mpc.branch status");
    net.branches.push_back(b);
  }
  if (gencost) {
    if (gencost->rows.size() < net.gens.size())
      throw ParseError("line " + std::to_string(gencost->line) + ": mpc.gencost has fewer rows than mpc.gen");
    if (gencost->rows.size() > net.gens.size())
      net.warnings.push_back("mpc.gencost: reactive power cost rows ignored");
    for (size_t k = 0; k < net.gens.size(); ++k) {
      const Row& r = gencost->rows[k];
      if (r.v.size() < 4) throw ParseError("line " + std::to_string(r.line) + ", mpc.gencost: expected at least 4 columns");
      GenCost c;
      c.model = to_int(r.v[0], r.line, "mpc.gencost model");
      c.startup = r.v[1];
      c.shutdown = r.v[2];
      const int ncost = to_int(r.v[3], r.line, "mpc.gencost n");
      const size_t need = 4 + static_cast<size_t>(c.model == 1 ? 2 * ncost : ncost);
      if (r.v.size() < need)
        throw ParseError("line " + std::to_string(r.line) + ", mpc.gencost: expected " + std::to_string(need) + " columns");
      if (r.v.size() > need) net.warnings.push_back("mpc.gencost row " + std::to_string(k + 1) + ": trailing columns ignored");
      c.coeffs.assign(r.v.begin() + 4, r.v.begin() + static_cast<long>(need));
      if (c.model == 1)
        net.warnings.push_back("mpc.gencost row " + std::to_string(k + 1) + ": piecewise linear cost is not supported");
      else if (c.model != 2)
        throw ParseError("line " + std::to_string(r.line) + ", mpc.gencost: unknown cost model " + std::to_string(c.model));
      net.gens[k].cost = c;
    }
  }
  try {
    net.validate();
  } catch (const StructuralError& e) {
    throw ParseError(std::string("invalid case: ") + e.what());
  }
  return net;
}

void write_matpower(const PowerNetwork& net, std::ostream& out) {
  out << "function mpc = " << (net.name.empty() ? "case" : net.name) << "\n\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << fmt(net.base_mva) << ";\n\n";
  auto header = [&](const char* const* cols, size_t n) {
    out << "%";
    for (size_t i = 0; i < n; ++i) out << "\t" << cols[i];
    out << "\n";
  };
  header(kBusCols, std::size(kBusCols));
  out << "mpc.bus = [\n";
  for (const auto& b : net.buses)
    out << "\t" << b.id << "\t" << b.type << "\t" << fmt(b.pd) << "\t" << fmt(b.qd) << "\t" << fmt(b.gs) << "\t"
        << fmt(b.bs) << "\t" << b.area << "\t" << fmt(b.vm) << "\t" << fmt(b.va) << "\t" << fmt(b.base_kv) << "\t"
        << b.zone << "\t" << fmt(b.vmax) << "\t" << fmt(b.vmin) << ";\n";
  out << "];\n\n";
  header(kGenCols, std::size(kGenCols));
  out << "mpc.gen = [\n";
  for (const auto& g : net.gens)
    out << "\t" << g.bus << "\t" << fmt(g.pg) << "\t" << fmt(g.qg) << "\t" << fmt(g.qmax) << "\t" << fmt(g.qmin) << "\t"
        << fmt(g.vg) << "\t" << fmt(g.mbase) << "\t" << g.status << "\t" << fmt(g.pmax) << "\t" << fmt(g.pmin)
        << ";\n";
  out << "];\n\n";
  header(kBranchCols, std::size(kBranchCols));
  out << "mpc.branch = [\n";
  for (const auto& b : net.branches)
    out << "\t" << b.from << "\t" << b.to << "\t" << fmt(b.r) << "\t" << fmt(b.x) << "\t" << fmt(b.b) << "\t"
        << fmt(b.rate_a) << "\t" << fmt(b.rate_b) << "\t" << fmt(b.rate_c) << "\t" << fmt(b.ratio) << "\t"
        << fmt(b.angle) << "\t" << b.status << ";\n";
  out << "];\n";
  bool costs = !net.gens.empty();
  for (const auto& g : net.gens) costs &= g.cost.has_value();
  if (costs) {
    out << "\n%\tmodel\tstartup\tshutdown\tn\tcoefficients\nmpc.gencost = [\n";
    for (const auto& g : net.gens) {
      const GenCost& c = *g.cost;
      const size_t n = c.model == 1 ? c.coeffs.size() / 2 : c.coeffs.size();
      out << "\t" << c.model << "\t" << fmt(c.startup) << "\t" << fmt(c.shutdown) << "\t" << n;
      for (double x : c.coeffs) out << "\t" << fmt(x);
      out << ";\n";
    }
    out << "];\n";
  }
}

nlohmann::json network_to_json(const PowerNetwork& net) {
  nlohmann::json j;
  j["name"] = net.name;
  j["baseMVA"] = net.base_mva;
  j["bus"] = nlohmann::json::array();
  for (const auto& b : net.buses)
    j["bus"].push_back({{"id", b.id}, {"type", b.type}, {"Pd", b.pd}, {"Qd", b.qd}, {"Gs", b.gs}, {"Bs", b.bs},
                        {"area", b.area}, {"Vm", b.vm}, {"Va", b.va}, {"baseKV", b.base_kv}, {"zone", b.zone},
                        {"Vmax", num(b.vmax)}, {"Vmin", num(b.vmin)}});
  j["gen"] = nlohmann::json::array();
  for (const auto& g : net.gens) {
    nlohmann::json e{{"bus", g.bus},          {"Pg", g.pg},     {"Qg", g.qg},         {"Qmax", num(g.qmax)},
                     {"Qmin", num(g.qmin)},   {"Vg", g.vg},     {"mBase", g.mbase},   {"status", g.status},
                     {"Pmax", num(g.pmax)},   {"Pmin", num(g.pmin)}};
    if (g.cost)
      e["cost"] = {{"model", g.cost->model},
                   {"startup", g.cost->startup},
                   {"shutdown", g.cost->shutdown},
                   {"coeffs", g.cost->coeffs}};
    j["gen"].push_back(e);
  }
  j["branch"] = nlohmann::json::array();
  for (const auto& b : net.branches)
    j["branch"].push_back({{"from", b.from}, {"to", b.to}, {"r", b.r}, {"x", b.x}, {"b", b.b}, {"rateA", b.rate_a},
                           {"rateB", b.rate_b}, {"rateC", b.rate_c}, {"ratio", b.ratio}, {"angle", b.angle},
                           {"status", b.status}});
  return j;
}

PowerNetwork network_from_json(const nlohmann::json& j) {
  PowerNetwork net;
  try {
    static const std::set<std::string> known{"name", "baseMVA", "bus", "gen", "branch"};
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!known.count(it.key())) net.warnings.push_back("unknown section '" + it.key() + "' ignored");
    net.name = j.value("name", std::string("case"));
    net.base_mva = num_from(j.at("baseMVA"));
    for (const auto& e : j.at("bus")) {
      Bus b;
      b.id = e.at("id").get<int>();
      b.type = e.value("type", 1);
      b.pd = e.value("Pd", 0.0);
      b.qd = e.value("Qd", 0.0);
      b.gs = e.value("Gs", 0.0);
      b.bs = e.value("Bs", 0.0);
      b.area = e.value("area", 1);
      b.vm = e.value("Vm", 1.0);
      b.va = e.value("Va", 0.0);
      b.base_kv = e.value("baseKV", 0.0);
      b.zone = e.value("zone", 1);
      b.vmax = num_from(e.at("Vmax"));
      b.vmin = num_from(e.at("Vmin"));
      net.buses.push_back(b);
    }
    if (j.contains("gen"))
      for (const auto& e : j.at("gen")) {
        Generator g;
        g.bus = e.at("bus").get<int>();
        g.pg = e.value("Pg", 0.0);
        g.qg = e.value("Qg", 0.0);
        g.qmax = e.contains("Qmax") ? num_from(e.at("Qmax")) : kInf;
        g.qmin = e.contains("Qmin") ? num_from(e.at("Qmin")) : -kInf;
        g.vg = e.value("Vg", 1.0);
        g.mbase = e.value("mBase", 100.0);
        g.status = e.value("status", 1);
        g.pmax = e.contains("Pmax") ? num_from(e.at("Pmax")) : kInf;
        g.pmin = e.contains("Pmin") ? num_from(e.at("Pmin")) : 0.0;
        if (e.contains("cost")) {
          const auto& c = e.at("cost");
          GenCost gc;
          gc.model = c.value("model", 2);
          gc.startup = c.value("startup", 0.0);
          gc.shutdown = c.value("shutdown", 0.0);
          gc.coeffs = c.at("coeffs").get<std::vector<double>>();
          g.cost = gc;
        }
        net.gens.push_back(g);
      }
    for (const auto& e : j.at("branch")) {
      Branch b;
      b.from = e.at("from").get<int>();
      b.to = e.at("to").get<int>();
      b.r = e.at("r").get<double>();
      b.x = e.at("x").get<double>();
      b.b = e.value("b", 0.0);
      b.rate_a = e.value("rateA", 0.0);
      b.rate_b = e.value("rateB", 0.0);
      b.rate_c = e.value("rateC", 0.0);
      b.ratio = e.value("ratio", 0.0);
      b.angle = e.value("angle", 0.0);
      b.status = e.value("status", 1);
      net.branches.push_back(b);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("JSON case: ") + e.what());
  }
  try {
    net.validate();
  } catch (const StructuralError& e) {
    throw ParseError(std::string("invalid case: ") + e.what());
  }
  return net;
}

PowerNetwork parse_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read case file " + path);
  auto ends_with = [&](const std::string& suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with(".m")) {
    std::string stem = path.substr(path.find_last_of('/') + 1);
    stem = stem.substr(0, stem.size() - 2);
    return parse_matpower(in, stem);
  }
  if (ends_with(".json")) {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    return network_from_json(j);
  }
  throw ParseError(path + ": unsupported case format (expected .m or .json)");
}

}  // namespace cpop
