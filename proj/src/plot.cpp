#include "propbench/error.hpp"
#include "propbench/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace propbench {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 160, kTop = 36, kBottom = 52;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi == lo) lo -= 0.5, hi += 0.5;
  }
};

void check(std::span<const PlotSeries> series) {
  if (series.empty()) throw InvalidArgument("emit_plot: no curves to plot");
  for (const auto& s : series)
    if (s.x.size() != s.y.size()) throw InvalidArgument("emit_plot: series '" + s.name + "' has ragged x/y");
}

}  // namespace

PlotSeries to_series(const RecallCurve& curve, const std::string& name) { return {name, curve.thresholds, curve.recall}; }

std::string render_plot_csv(std::span<const PlotSeries> series) {
  check(series);
  std::string out = "series,x,y\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::string name = s.name;
      if (name.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char c : name) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        name = q + "\"";
      }
      out += name + "," + format_float(s.x[i]) + "," + format_float(s.y[i]) + "\n";
    }
  return out;
}

std::string render_svg(std::span<const PlotSeries> series, const PlotOptions& options) {
  check(series);
  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.finish();
  ry.finish();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto sy = [&](double v) { return kTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty())
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
           escape_xml(options.title) + "</text>\n";
  out += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
         num(kTop + ph) + "\"/>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(kTop + ph) +
         "\"/>\n</g>\n";
  out += "<g class=\"ticks\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = rx.lo + (rx.hi - rx.lo) * i / 5.0;
    const double yv = ry.lo + (ry.hi - ry.lo) * i / 5.0;
    out += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
           format_float(xv) + "</text>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" +
           format_float(yv) + "</text>\n";
  }
  out += "</g>\n";
  out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
         escape_xml(options.x_label) + "</text>\n";
  out += "<text transform=\"translate(16," + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape_xml(options.y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += num(sx(s.x[i])) + "," + num(sy(s.y[i]));
    }
    out += "<polyline class=\"series\" fill=\"none\" stroke=\"" + std::string(colour) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double ly = kTop + 14.0 * double(k) + 8;
    out += "<g class=\"legend\"><line x1=\"" + num(kLeft + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kLeft + pw + 32) + "\" y2=\"" + num(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>" +
           "<text x=\"" + num(kLeft + pw + 36) + "\" y=\"" + num(ly + 4) + "\">" + escape_xml(s.name) + "</text></g>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_plot(std::span<const PlotSeries> series, const fs::path& path, const PlotOptions& options) {
  const std::string svg = render_svg(series, options);
  const std::string csv = render_plot_csv(series);
  fs::path sidecar = path;
  sidecar.replace_extension(".csv");
  atomic_write(sidecar, csv);
  atomic_write(path, svg);
}

}  // namespace propbench
