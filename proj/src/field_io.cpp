#include "wforge/field_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "wforge/error.hpp"

namespace wforge {

namespace {

const char* kHeader = "# nx,ny,x0,y0,lx,ly,boundary_mode,kind";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ParseError(where + ": expected a number, got '" + t + "'");
  return v;
}

int to_int(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ParseError(where + ": expected an integer, got '" + t + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(std::ostream& out, const ScalarField& f,
                     const std::string& config_hash) {
  const auto& g = f.grid();
  out << kHeader << '\n';
  out << "# " << g.nx() << ',' << g.ny() << ',' << format_double(g.x0()) << ','
      << format_double(g.y0()) << ',' << format_double(g.lx()) << ','
      << format_double(g.ly()) << ',' << to_string(g.mode()) << ','
      << (f.is_real() ? "real" : "complex") << '\n';
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const cplx v = f(i, j);
      out << i << ',' << j << ',' << format_double(v.real()) << ','
          << format_double(v.imag()) << '\n';
    }
}

void write_field_csv(const std::string& path, const ScalarField& f,
                     const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_field_csv(out, f, config_hash);
}

ScalarField read_field_csv(std::istream& in, const std::string& name) {
  std::string line;
  int lineno = 0;
  auto where = [&] { return name + ":" + std::to_string(lineno); };

  std::string header, desc;
  ++lineno;
  std::getline(in, header);
  ++lineno;
  std::getline(in, desc);
  auto [g, kind] = parse_grid_header(header, desc, name);
  std::optional<ComplexGrid> grid(g);
  const int nx = g.nx(), ny = g.ny();

  std::vector<cplx> values(grid->size());
  std::vector<bool> seen(grid->size(), false);
  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cols = split(t, ',');
    if (cols.size() != 4) throw ParseError(where() + ": expected i,j,re,im");
    const int i = to_int(cols[0], where());
    const int j = to_int(cols[1], where());
    if (i < 0 || i >= nx || j < 0 || j >= ny)
      throw ParseError(where() + ": index out of range");
    const std::size_t k = grid->index(i, j);
    if (seen[k]) throw ParseError(where() + ": duplicate sample");
    seen[k] = true;
    values[k] = {to_double(cols[2], where()), to_double(cols[3], where())};
    if (kind == FieldKind::real && values[k].imag() != 0.0)
      throw ParseError(where() + ": nonzero imaginary part in a real field");
    ++count;
  }
  if (count != grid->size())
    throw ParseError(name + ": expected " + std::to_string(grid->size()) +
                     " samples, found " + std::to_string(count));
  return ScalarField(*grid, std::move(values), kind);
}

GridHeader parse_grid_header(const std::string& header_line,
                             const std::string& values_line,
                             const std::string& where) {
  if (trim(header_line) != kHeader)
    throw ParseError(where + ":1: missing header '" + std::string(kHeader) + "'");
  const std::string at = where + ":2";
  if (values_line.rfind("# ", 0) != 0)
    throw ParseError(at + ": missing grid description line");
  auto parts = split(values_line.substr(2), ',');
  if (parts.size() != 8) throw ParseError(at + ": grid description needs 8 fields");
  const int nx = to_int(parts[0], at);
  const int ny = to_int(parts[1], at);
  const double x0 = to_double(parts[2], at);
  const double y0 = to_double(parts[3], at);
  const double lx = to_double(parts[4], at);
  const double ly = to_double(parts[5], at);
  const std::string mode_s = trim(parts[6]);
  if (mode_s != "periodic" && mode_s != "open")
    throw ParseError(at + ": unknown boundary mode '" + mode_s + "'");
  const std::string kind_s = trim(parts[7]);
  if (kind_s != "real" && kind_s != "complex")
    throw ParseError(at + ": kind must be real or complex");
  try {
    return {ComplexGrid(nx, ny, x0, y0, lx, ly, boundary_mode_from_string(mode_s)),
            kind_s == "real" ? FieldKind::real : FieldKind::complex};
  } catch (const std::invalid_argument& e) {
    throw ParseError(at + ": " + e.what());
  }
}

std::vector<double> parse_number_row(const std::string& line,
                                     const std::string& where) {
  std::vector<double> out;
  for (const auto& c : split(trim(line), ',')) out.push_back(to_double(c, where));
  return out;
}

ScalarField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_field_csv(in, path);
}

}  // namespace wforge
