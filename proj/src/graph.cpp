#include "equikernel/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace equikernel {

namespace {

const std::array<std::string, 119> kSymbols = {
    "X",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

[[noreturn]] void parse_fail(int line, const std::string& what) {
  std::ostringstream os;
  os << "xyz parse error (line " << line << "): " << what;
  throw std::runtime_error(os.str());
}

}  // namespace

int atomic_number(std::string_view symbol) {
  static const std::unordered_map<std::string_view, int> table = [] {
    std::unordered_map<std::string_view, int> t;
    for (int z = 1; z <= 118; ++z) t.emplace(kSymbols[static_cast<std::size_t>(z)], z);
    return t;
  }();
  auto it = table.find(symbol);
  if (it == table.end())
    throw std::runtime_error("unknown element symbol: " + std::string(symbol));
  return it->second;
}

const std::string& element_symbol(int z) {
  if (z < 1 || z > 118) throw std::invalid_argument("atomic number out of range [1, 118]");
  return kSymbols[static_cast<std::size_t>(z)];
}

AtomicStructure parse_xyz(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  auto next_line = [&](bool required) -> bool {
    if (std::getline(in, line)) {
      ++lineno;
      return true;
    }
    if (required) parse_fail(lineno, "unexpected end of file");
    return false;
  };

  next_line(true);
  int count = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> count) || count < 0) parse_fail(lineno, "expected the atom count");
  }
  AtomicStructure s;
  next_line(true);
  s.comment = line;

  s.species.reserve(static_cast<std::size_t>(count));
  s.positions.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      std::ostringstream os;
      os << "count line declares " << count << " atoms, found only " << i;
      parse_fail(lineno, os.str());
    }
    ++lineno;
    std::istringstream ls(line);
    std::string sym;
    double x, y, z;
    if (!(ls >> sym)) parse_fail(lineno, "expected an element symbol");
    if (!(ls >> x >> y >> z)) parse_fail(lineno, "malformed coordinate triple");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      parse_fail(lineno, "non-finite coordinate");
    int zn;
    try {
      zn = atomic_number(sym);
    } catch (const std::exception& e) {
      parse_fail(lineno, e.what());
    }
    s.species.push_back(zn);
    s.positions.push_back({x, y, z});
  }
  return s;
}

std::string write_xyz(const AtomicStructure& s) {
  std::ostringstream os;
  os.precision(12);
  os << s.size() << "\n" << s.comment << "\n";
  for (int i = 0; i < s.size(); ++i) {
    const Vec3& p = s.positions[static_cast<std::size_t>(i)];
    os << element_symbol(s.species[static_cast<std::size_t>(i)]) << " " << p.x << " " << p.y
       << " " << p.z << "\n";
  }
  return os.str();
}

AtomGraph build_graph(const AtomicStructure& s, double cutoff, int max_neighbors) {
  if (cutoff <= 0.0) throw std::invalid_argument("build_graph: cutoff must be positive");
  if (max_neighbors < 1) throw std::invalid_argument("build_graph: max_neighbors must be >= 1");

  AtomGraph g;
  g.structure = &s;
  g.cutoff = cutoff;
  g.max_neighbors = max_neighbors;
  const int n = s.size();
  g.first_edge.assign(static_cast<std::size_t>(n + 1), 0);

  struct Cand {
    double dist;
    int source;
  };
  std::vector<Cand> cand;
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 r = s.positions[static_cast<std::size_t>(j)] - s.positions[static_cast<std::size_t>(i)];
      const double d = r.norm();
      if (d == 0.0)
        throw std::domain_error("build_graph: two atoms at identical positions (degenerate edge)");
      if (d <= cutoff) cand.push_back({d, j});
    }
    std::sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.source < b.source;
    });
    if (static_cast<int>(cand.size()) > max_neighbors)
      cand.resize(static_cast<std::size_t>(max_neighbors));
    for (const Cand& c : cand) {
      Edge e;
      e.source = c.source;
      e.target = i;
      e.rel = s.positions[static_cast<std::size_t>(c.source)] -
              s.positions[static_cast<std::size_t>(i)];
      e.dist = c.dist;
      e.align = so3::alignment_rotation(e.rel * (1.0 / c.dist));
      g.edges.push_back(e);
    }
    g.first_edge[static_cast<std::size_t>(i + 1)] = static_cast<int>(g.edges.size());
  }
  return g;
}

}  // namespace equikernel
