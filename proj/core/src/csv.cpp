#include "tumor/series.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tumor/errors.hpp"

namespace tumor {
namespace {
constexpr const char* kSeriesHeader =
    "t,n_prolif,n_quiesc,n_necrotic,V_p,V_q,V_n,roundness,com_x,com_y";
}

void write_series_csv(std::ostream& out, const std::vector<Sample>& series) {
  out << kSeriesHeader << '\n';
  char buf[256];
  for (const Sample& s : series) {
    std::snprintf(buf, sizeof buf, "%.10g,%ld,%ld,%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", s.t,
                  s.n_prolif, s.n_quiesc, s.n_necrotic, s.volumes.V_p, s.volumes.V_q,
                  s.volumes.V_n, s.roundness, s.com.x, s.com.y);
    out << buf;
  }
}

std::vector<Sample> read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader)
    throw ConfigError("time series header mismatch: expected '" + std::string(kSeriesHeader) +
                      "'");
  std::vector<Sample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Sample s;
    std::string cells[10];
    std::istringstream ls(line);
    int n = 0;
    while (n < 10 && std::getline(ls, cells[n], ',')) ++n;
    if (n != 10) throw ConfigError("time series line " + std::to_string(lineno) + ": need 10 columns");
    try {
      s.t = std::stod(cells[0]);
      s.n_prolif = std::stol(cells[1]);
      s.n_quiesc = std::stol(cells[2]);
      s.n_necrotic = std::stol(cells[3]);
      s.volumes = {std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6])};
      s.roundness = std::stod(cells[7]);
      s.com = {std::stod(cells[8]), std::stod(cells[9])};
    } catch (const std::logic_error&) {
      throw ConfigError("time series line " + std::to_string(lineno) + ": bad number");
    }
    out.push_back(s);
  }
  return out;
}

void write_snapshot_csv(std::ostream& out, const Grid& grid, const std::vector<double>& u,
                        const Field& oxygen, const Field& pressure) {
  if (u.size() != grid.size() || oxygen.size() != grid.size() || pressure.size() != grid.size())
    throw ConfigError("snapshot fields do not match the grid");
  out << "x,y,u,c,p\n";
  char buf[160];
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Point x = grid.center(static_cast<int>(v));
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g\n", x.x, x.y, u[v], oxygen[v],
                  pressure[v]);
    out << buf;
  }
}

}  // namespace tumor
