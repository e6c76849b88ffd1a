#include "qshoot/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qshoot/errors.hpp"

namespace qshoot::io {

namespace {
constexpr const char* kVersion = "1.0.0";
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !target.parent_path().empty()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, target);
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string curve_csv(const BifurcationCurve& curve, bool with_derivative) {
  std::ostringstream os;
  os << "gamma,T,R,lambda,yprime_T";
  if (with_derivative) os << ",Tprime_v1,Tprime_fd";
  os << '\n';
  const double nan = std::nan("");
  for (const SweepRow& r : curve.rows) {
    const ShootOutcome& o = r.outcome;
    os << num(r.gamma) << ',' << num(r.ok ? o.T : nan) << ',' << num(r.ok ? o.R : nan) << ','
       << num(r.ok ? o.lambda_of_gamma : nan) << ',' << num(r.ok ? o.yprime_T : nan);
    if (with_derivative) os << ',' << num(r.Tprime_v1.value_or(nan)) << ',' << num(r.Tprime_fd.value_or(nan));
    os << '\n';
  }
  return os.str();
}

nlohmann::ordered_json meta_json(const std::string& nl_description, int n, double beta, double rtol, double atol) {
  nlohmann::ordered_json m;
  m["nonlinearity"] = nl_description;
  m["n"] = n;
  m["beta"] = beta;
  m["rtol"] = rtol;
  m["atol"] = atol;
  m["version"] = kVersion;
  return m;
}

nlohmann::ordered_json outcome_json(const ShootOutcome& o) {
  nlohmann::ordered_json j;
  j["gamma"] = o.gamma;
  j["found"] = o.found;
  j["status"] = o.status;
  j["route"] = to_string(o.route);
  j["T"] = o.T;
  j["yprime_T"] = o.yprime_T;
  j["R"] = o.R;
  j["lambda"] = o.lambda_of_gamma;
  j["Ttilde"] = o.Ttilde ? nlohmann::ordered_json(*o.Ttilde) : nlohmann::ordered_json(nullptr);
  if (o.V1_at_T) j["V1_at_T"] = *o.V1_at_T;
  j["exploratory"] = o.exploratory;
  j["steps"] = o.steps;
  j["rejected"] = o.rejected;
  j["event_residual"] = o.event_residual;
  return j;
}

nlohmann::ordered_json curve_json(const BifurcationCurve& curve, bool with_derivative) {
  nlohmann::ordered_json j;
  j["meta"] = meta_json(curve.nl_description, curve.n, curve.beta, curve.rtol, curve.atol);
  j["meta"]["exploratory"] = curve.exploratory;
  auto rows = nlohmann::ordered_json::array();
  for (const SweepRow& r : curve.rows) {
    nlohmann::ordered_json row;
    row["gamma"] = r.gamma;
    row["ok"] = r.ok;
    if (!r.ok) row["error"] = r.error;
    if (r.ok) {
      row["T"] = r.outcome.T;
      row["R"] = r.outcome.R;
      row["lambda"] = r.outcome.lambda_of_gamma;
      row["yprime_T"] = r.outcome.yprime_T;
      if (with_derivative) {
        row["Tprime_v1"] = r.Tprime_v1 ? nlohmann::ordered_json(*r.Tprime_v1) : nlohmann::ordered_json(nullptr);
        row["Tprime_fd"] = r.Tprime_fd ? nlohmann::ordered_json(*r.Tprime_fd) : nlohmann::ordered_json(nullptr);
      }
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

nlohmann::ordered_json turning_json(const TurningReport& t) {
  auto o = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["S"] = o(t.S);
  j["S1"] = o(t.S1);
  j["S_predicted"] = t.S_predicted;
  j["V2prime_at_S"] = t.V2prime_at_S;
  j["S0"] = t.S0;
  j["S6"] = t.S6;
  j["S_above_S6"] = t.S_above_S6 ? nlohmann::ordered_json(*t.S_above_S6) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string svg_polyline(const std::vector<double>& x, const std::vector<double>& y, const std::string& xlabel,
                         const std::string& ylabel, const std::string& title) {
  const double W = 640, H = 480, L = 70, B = 60, Rm = 20, Tm = 40;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) pts.emplace_back(x[i], y[i]);
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (auto& [px, py] : pts) {
      x0 = std::min(x0, px);
      x1 = std::max(x1, px);
      y0 = std::min(y0, py);
      y1 = std::max(y1, py);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto sx = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - Rm); };
  auto sy = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - B - Tm); };
  char buf[128];
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  os << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  os << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B,
                W - Rm, H - B);
  os << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, L, Tm);
  os << buf;
  os << "<text x=\"" << (L + W - Rm) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"14\">"
     << xlabel << "</text>\n";
  os << "<text x=\"18\" y=\"" << (H - B + Tm) / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
     << (H - B + Tm) / 2 << ")\">" << ylabel << "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\">%.4g</text>\n", L, H - B + 16, x0);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n", W - Rm,
                H - B + 16, x1);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n", L - 4,
                H - B, y0);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n", L - 4,
                Tm + 4, y1);
  os << buf;
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", sx(pts[i].first), sy(pts[i].second));
    os << buf;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace qshoot::io
