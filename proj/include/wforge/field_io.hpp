#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wforge/grid.hpp"

namespace wforge {

/// Format:
///   # nx,ny,x0,y0,lx,ly,boundary_mode,kind
///   # <values of the fields above>
///   # config_hash=<hex>          (optional)
///   i,j,re,im                     (one row per sample)
void write_field_csv(std::ostream& out, const ScalarField& f,
                     const std::string& config_hash = {});
void write_field_csv(const std::string& path, const ScalarField& f,
                     const std::string& config_hash = {});

/// Throws ParseError with a line number on malformed input.
ScalarField read_field_csv(std::istream& in, const std::string& name = "<stream>");
ScalarField read_field_csv(const std::string& path);

struct GridHeader {
  ComplexGrid grid;
  FieldKind kind;
};

/// Parses the two header lines shared by field and chart CSV files.
GridHeader parse_grid_header(const std::string& header_line,
                             const std::string& values_line,
                             const std::string& where);

/// Splits a comma-separated row of numbers; throws ParseError.
std::vector<double> parse_number_row(const std::string& line,
                                     const std::string& where);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

}  // namespace wforge
