#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qshoot/linearization.hpp"
#include "qshoot/shooting.hpp"

namespace qshoot::io {

/// Write to a sibling temporary file and rename over `path`; no partial file on failure.
void atomic_write(const std::string& path, const std::string& content);

/// Shortest round-trip decimal form; "nan" / "inf" / "-inf" for non-finite values.
std::string num(double x);

std::string curve_csv(const BifurcationCurve& curve, bool with_derivative);
nlohmann::ordered_json curve_json(const BifurcationCurve& curve, bool with_derivative);

nlohmann::ordered_json outcome_json(const ShootOutcome& o);
nlohmann::ordered_json turning_json(const TurningReport& t);

/// `meta` header shared by JSON outputs.
nlohmann::ordered_json meta_json(const std::string& nl_description, int n, double beta, double rtol, double atol);

/// Minimal SVG with one polyline; y on the vertical axis.
std::string svg_polyline(const std::vector<double>& x, const std::vector<double>& y, const std::string& xlabel,
                         const std::string& ylabel, const std::string& title);

}  // namespace qshoot::io
