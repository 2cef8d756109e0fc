#include "modalbound/plot.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace modalbound {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  if (s == "nan") return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw PreconditionError("malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw PreconditionError("malformed number '" + s + "'");
  }
}

double set_size(const std::string& s) {
  if (s == "none") return 0.0;
  return static_cast<double>(split(s, ';').size());
}

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PlotKind parse_plot_kind(std::string_view text) {
  if (text == "decay") return PlotKind::decay;
  if (text == "bound-gap") return PlotKind::bound_gap;
  if (text == "risk-vs-modalities") return PlotKind::risk_vs_modalities;
  throw ConfigError("kind", "expected decay, bound-gap or risk-vs-modalities");
}

std::vector<PlotPoint> plot_points(const std::string& csv_text, PlotKind kind) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("no rows");
  const auto header = split(line, ',');
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw PreconditionError("sweep CSV lacks column '" + name + "'");
  };

  std::size_t xcol = 0, ycol = 0, ycol2 = 0;
  switch (kind) {
    case PlotKind::decay:
      xcol = column("n");
      ycol = column("rad_mc");
      break;
    case PlotKind::bound_gap:
      xcol = column("n");
      ycol = column("t3_rhs");
      ycol2 = column("t3_lhs");
      break;
    case PlotKind::risk_vs_modalities:
      xcol = column("M_set");
      ycol = column("pop_risk_M");
      break;
  }

  std::map<double, std::vector<double>> groups;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw PreconditionError("row width differs from header");
    const double x = kind == PlotKind::risk_vs_modalities ? set_size(cells[xcol]) : parse_number(cells[xcol]);
    double y = parse_number(cells[ycol]);
    if (kind == PlotKind::bound_gap) y -= parse_number(cells[ycol2]);
    if (std::isnan(x) || std::isnan(y)) continue;
    groups[x].push_back(y);
  }
  if (groups.empty()) throw PreconditionError("no rows");

  std::vector<PlotPoint> points;
  for (const auto& [x, ys] : groups) {
    const double k = static_cast<double>(ys.size());
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= k;
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    const double se = ys.size() > 1 ? std::sqrt(var / (k - 1.0) / k) : 0.0;
    PlotPoint p;
    p.count = static_cast<int>(ys.size());
    if (kind == PlotKind::decay) {
      p.x = std::log(x);
      p.y = std::log(mean);
      p.stderr_y = se / mean;
    } else {
      p.x = x;
      p.y = mean;
      p.stderr_y = se;
    }
    points.push_back(p);
  }
  return points;
}

std::string plot_tsv(const std::vector<PlotPoint>& points) {
  std::string out = "x\ty\tstderr\n";
  for (const auto& p : points) out += format(p.x) + "\t" + format(p.y) + "\t" + format(p.stderr_y) + "\n";
  return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw SizeError("slope needs >= 2 matching points");
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw SizeError("slope needs distinct x values");
  return sxy / sxx;
}

}  // namespace modalbound
