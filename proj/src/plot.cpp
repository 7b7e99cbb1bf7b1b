#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "alearn/experiment.hpp"
#include "alearn/format.hpp"

namespace alearn {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 600.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 430.0;

constexpr std::array<const char*, 6> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
};

double map_x(double pct) { return kLeft + pct * (kRight - kLeft); }
double map_y(double acc) { return kBottom - acc * (kBottom - kTop); }

}  // namespace

void emit_plot(const std::vector<std::string>& ledger_files, const std::string& out_path,
               std::optional<double> baseline_accuracy) {
  if (ledger_files.empty()) {
    throw PreconditionError("emit_plot: need at least one ledger file");
  }

  struct Curve {
    std::string mode;
    std::vector<CurvePoint> points;
  };
  std::vector<Curve> curves;
  std::vector<std::string> mode_order;  // first-seen order fixes colors
  for (const std::string& path : ledger_files) {
    const LedgerFile ledger = read_ledger_csv(path);
    Curve curve;
    curve.mode = ledger.mode;
    for (const LedgerRow& row : ledger.rows) {
      if (!std::isnan(row.test_accuracy)) {
        curve.points.push_back({row.pct_labeled, row.test_accuracy});
      }
    }
    if (std::find(mode_order.begin(), mode_order.end(), ledger.mode) == mode_order.end()) {
      mode_order.push_back(ledger.mode);
    }
    curves.push_back(std::move(curve));
  }

  const auto color_of = [&](const std::string& mode) {
    const std::size_t idx =
        std::find(mode_order.begin(), mode_order.end(), mode) - mode_order.begin();
    return kPalette[idx % kPalette.size()];
  };

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ParseError("cannot open file for writing: " + out_path);

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(kWidth)
      << "\" height=\"" << format_double(kHeight) << "\" viewBox=\"0 0 "
      << format_double(kWidth) << " " << format_double(kHeight) << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << format_double(kWidth) << "\" height=\""
      << format_double(kHeight) << "\" fill=\"white\"/>\n";

  // Axes with ticks every 0.25 on both unit scales.
  out << "  <line x1=\"" << format_double(kLeft) << "\" y1=\"" << format_double(kBottom)
      << "\" x2=\"" << format_double(kRight) << "\" y2=\"" << format_double(kBottom)
      << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << format_double(kLeft) << "\" y1=\"" << format_double(kTop)
      << "\" x2=\"" << format_double(kLeft) << "\" y2=\"" << format_double(kBottom)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    const double x = map_x(v);
    const double y = map_y(v);
    out << "  <line x1=\"" << format_double(x) << "\" y1=\"" << format_double(kBottom)
        << "\" x2=\"" << format_double(x) << "\" y2=\"" << format_double(kBottom + 6.0)
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << format_double(x) << "\" y=\"" << format_double(kBottom + 22.0)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << format_double(v) << "</text>\n";
    out << "  <line x1=\"" << format_double(kLeft - 6.0) << "\" y1=\"" << format_double(y)
        << "\" x2=\"" << format_double(kLeft) << "\" y2=\"" << format_double(y)
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << format_double(kLeft - 10.0) << "\" y=\""
        << format_double(y + 4.0) << "\" font-size=\"12\" text-anchor=\"end\">"
        << format_double(v) << "</text>\n";
  }
  out << "  <text x=\"" << format_double((kLeft + kRight) / 2.0) << "\" y=\""
      << format_double(kHeight - 8.0)
      << "\" font-size=\"14\" text-anchor=\"middle\">fraction labeled</text>\n";
  out << "  <text x=\"18\" y=\"" << format_double((kTop + kBottom) / 2.0)
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << format_double((kTop + kBottom) / 2.0) << ")\">test accuracy</text>\n";

  if (baseline_accuracy) {
    const double y = map_y(*baseline_accuracy);
    out << "  <line x1=\"" << format_double(kLeft) << "\" y1=\"" << format_double(y)
        << "\" x2=\"" << format_double(kRight) << "\" y2=\"" << format_double(y)
        << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    out << "  <text x=\"" << format_double(kRight - 4.0) << "\" y=\""
        << format_double(y - 6.0)
        << "\" font-size=\"12\" text-anchor=\"end\" fill=\"gray\">baseline "
        << format_double(*baseline_accuracy) << "</text>\n";
  }

  for (const Curve& curve : curves) {
    out << "  <polyline fill=\"none\" stroke=\"" << color_of(curve.mode)
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      if (i > 0) out << ' ';
      out << format_double(map_x(curve.points[i].pct_labeled)) << ','
          << format_double(map_y(curve.points[i].accuracy));
    }
    out << "\"/>\n";
  }

  for (std::size_t i = 0; i < mode_order.size(); ++i) {
    const double y = kTop + 16.0 * static_cast<double>(i);
    out << "  <line x1=\"" << format_double(kRight - 110.0) << "\" y1=\""
        << format_double(y) << "\" x2=\"" << format_double(kRight - 86.0) << "\" y2=\""
        << format_double(y) << "\" stroke=\"" << color_of(mode_order[i])
        << "\" stroke-width=\"1.5\"/>\n";
    out << "  <text x=\"" << format_double(kRight - 80.0) << "\" y=\""
        << format_double(y + 4.0) << "\" font-size=\"12\">" << mode_order[i]
        << "</text>\n";
  }

  out << "</svg>\n";
  if (!out) throw ParseError("write failed: " + out_path);
}

}  // namespace alearn
