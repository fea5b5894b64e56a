#pragma once

// Report bundle for a paired experiment: mean Y, success rates, BER tables per
// delta, ECDF and histogram data, and static SVG plots. Output depends only on
// the two result matrices and the delta list, so reruns are byte-identical.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/ber.hpp"
#include "placebo/io.hpp"

namespace placebo {

struct EcdfPoint {
  double y;
  double f;  // fraction of values <= y
};

inline std::vector<EcdfPoint> ecdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<EcdfPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    if (k + 1 == values.size() || values[k + 1] != values[k])
      out.push_back({values[k], static_cast<double>(k + 1) / n});
  return out;
}

struct HistogramBin {
  double lo;
  double hi;
  std::uint64_t count;
};

/// `bins` equal-width bins over [0, hi]. With hi == 0 a single [0, 0] bin.
inline std::vector<HistogramBin> histogram(const std::vector<double>& values, double hi, std::size_t bins = 20) {
  if (hi <= 0.0) return {{0.0, 0.0, static_cast<std::uint64_t>(values.size())}};
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b)
    out[b] = {hi * static_cast<double>(b) / static_cast<double>(bins),
              hi * static_cast<double>(b + 1) / static_cast<double>(bins), 0};
  for (const double v : values) {
    auto b = static_cast<std::size_t>(v / hi * static_cast<double>(bins));
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

/// Non-failed scores of one group ("overall" = every row).
inline std::vector<double> group_values(const ResultMatrix& m, const std::string& group) {
  std::vector<double> out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (group != "overall" && m.group(i) != group) continue;
    for (std::size_t j = 0; j < m.runs(); ++j)
      if (m.score(i, j)) out.push_back(*m.score(i, j));
  }
  return out;
}

namespace detail {

struct Series {
  std::string label;
  std::string color;
  std::string dash;
  std::vector<double> values;
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  static constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double xmax, ymax;
  double px(double x) const { return L + x / xmax * (W - L - R); }
  double py(double y) const { return H - B - y / ymax * (H - T - B); }
};

inline std::string svg_open(const std::string& title, const Frame& fr, const std::string& xlabel,
                            const std::string& ylabel, bool integer_y) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      Frame::W, Frame::H, Frame::W, Frame::H);
  s += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", Frame::W, Frame::H);
  s += fmt::format("<text x=\"{:.2f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", Frame::W / 2,
                   svg_escape(title));
  const double x0 = fr.px(0), x1 = fr.px(fr.xmax), y0 = fr.py(0), y1 = fr.py(fr.ymax);
  s += fmt::format("<path d=\"M{:.2f},{:.2f} L{:.2f},{:.2f} L{:.2f},{:.2f}\" fill=\"none\" stroke=\"black\"/>\n", x0,
                   y1, x0, y0, x1, y0);
  for (int k = 0; k <= 4; ++k) {
    const double xv = fr.xmax * k / 4.0, yv = fr.ymax * k / 4.0;
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", fr.px(xv),
                     y0, fr.px(xv), y0 + 5);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", fr.px(xv), y0 + 18,
                     xv);
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", x0 - 5,
                     fr.py(yv), x0, fr.py(yv));
    const std::string lab = integer_y ? fmt::format("{:.0f}", yv) : fmt::format("{:.2f}", yv);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", x0 - 8, fr.py(yv) + 4, lab);
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                   Frame::H - 12, svg_escape(xlabel));
  s += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">{}</text>\n",
      (y0 + y1) / 2, (y0 + y1) / 2, svg_escape(ylabel));
  return s;
}

inline std::string svg_legend(const std::vector<Series>& series) {
  std::string s;
  double y = Frame::T + 10;
  for (const auto& se : series) {
    const double x = Frame::W - Frame::R - 130;
    s += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"{}/>\n", x, y,
        x + 24, y, se.color, se.dash.empty() ? "" : fmt::format(" stroke-dasharray=\"{}\"", se.dash));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", x + 30, y + 4, svg_escape(se.label));
    y += 18;
  }
  return s;
}

inline double axis_max(const std::vector<Series>& series) {
  double hi = 0.0;
  for (const auto& se : series)
    for (double v : se.values) hi = std::max(hi, v);
  return hi > 0.0 ? hi * 1.05 : 0.01;
}

}  // namespace detail

/// Step-function ECDFs of every series on one set of axes.
inline std::string render_ecdf_svg(const std::string& title, const std::vector<detail::Series>& series) {
  detail::Frame fr{detail::axis_max(series), 1.0};
  std::string s = detail::svg_open(title, fr, "Y", "F(Y)", false);
  for (const auto& se : series) {
    if (se.values.empty()) continue;
    std::string d = fmt::format("M{:.2f},{:.2f}", fr.px(0), fr.py(0));
    double f = 0.0;
    for (const auto& p : ecdf(se.values)) {
      d += fmt::format(" L{:.2f},{:.2f} L{:.2f},{:.2f}", fr.px(p.y), fr.py(f), fr.px(p.y), fr.py(p.f));
      f = p.f;
    }
    d += fmt::format(" L{:.2f},{:.2f}", fr.px(fr.xmax), fr.py(f));
    s += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{}/>\n", d, se.color,
                     se.dash.empty() ? "" : fmt::format(" stroke-dasharray=\"{}\"", se.dash));
  }
  s += detail::svg_legend(series) + "</svg>\n";
  return s;
}

/// Side-by-side bars per bin, shared bin edges.
inline std::string render_histogram_svg(const std::string& title, const std::vector<detail::Series>& series,
                                        std::size_t bins = 20) {
  double hi = 0.0;
  for (const auto& se : series)
    for (double v : se.values) hi = std::max(hi, v);
  std::vector<std::vector<HistogramBin>> hs;
  std::uint64_t top = 1;
  for (const auto& se : series) {
    hs.push_back(histogram(se.values, hi, bins));
    for (const auto& b : hs.back()) top = std::max(top, b.count);
  }
  const double xmax = hi > 0.0 ? hi : 0.01;
  detail::Frame fr{xmax, static_cast<double>(top)};
  std::string s = detail::svg_open(title, fr, "Y", "count", true);
  const std::size_t nb = hs.empty() ? 0 : hs.front().size();
  const double slot = (detail::Frame::W - detail::Frame::L - detail::Frame::R) / static_cast<double>(std::max<std::size_t>(nb, 1));
  const double bar = slot * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t k = 0; k < series.size(); ++k)
    for (std::size_t b = 0; b < nb; ++b) {
      const double x = detail::Frame::L + slot * static_cast<double>(b) + slot * 0.1 + bar * static_cast<double>(k);
      const double y = fr.py(static_cast<double>(hs[k][b].count));
      s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x, y,
                       bar, fr.py(0) - y, series[k].color);
    }
  s += detail::svg_legend(series) + "</svg>\n";
  return s;
}

struct ReportBundle {
  nlohmann::json summary;
  std::vector<std::vector<BerReport>> ber;  // one table per delta
  std::vector<double> deltas;
};

inline std::string delta_tag(double delta) { return fmt::format("{:.4f}", delta); }

/// `ym` is the metaheuristic, `y0` its placebo.
inline ReportBundle summarize(const ResultMatrix& ym, const ResultMatrix& y0, const std::vector<double>& deltas) {
  check_paired(ym, y0);
  ReportBundle out;
  out.deltas = deltas;
  nlohmann::json algos = nlohmann::json::object();
  for (const ResultMatrix* m : {&ym, &y0}) {
    nlohmann::json means = nlohmann::json::array(), rates = nlohmann::json::array();
    for (const auto& s : mean_score(*m)) means.push_back({{"group", s.group}, {"mean_y", s.mean}, {"runs", s.runs}});
    for (const auto& s : success_rate(*m))
      rates.push_back({{"group", s.group}, {"successes", s.successes}, {"runs", s.runs}, {"rate", s.rate()}});
    algos[m->algorithm_label()] = {{"mean_y", means}, {"success", rates}, {"failed_cells", m->failed_cells()}};
  }
  nlohmann::json ber = nlohmann::json::array();
  for (double d : deltas) {
    out.ber.push_back(ber_grouped(ym, y0, d));
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : out.ber.back()) rows.push_back(ber_to_json(r));
    ber.push_back({{"delta", d}, {"rows", rows}});
  }
  const AurocReport a = auroc_identity_check(ym, y0);
  out.summary = {{"format", "placebo-summary/1"},
                 {"metaheuristic", ym.algorithm_label()},
                 {"placebo", y0.algorithm_label()},
                 {"instances", ym.rows()},
                 {"runs", ym.runs()},
                 {"algorithms", algos},
                 {"ber", ber},
                 {"auroc_check", {{"auroc", a.auroc}, {"tie_mass", a.tie_mass}, {"ok", a.ok()}}}};
  return out;
}

/// Writes summary.json, ber_<delta>.csv, ber_tables.txt and plots/ under
/// `dir`. Returns the written paths in a fixed order.
inline std::vector<std::string> write_report(const ResultMatrix& ym, const ResultMatrix& y0,
                                             const std::vector<double>& deltas, const std::string& dir) {
  namespace fs = std::filesystem;
  const ReportBundle bundle = summarize(ym, y0, deltas);
  fs::create_directories(fs::path(dir) / "plots");
  std::vector<std::string> written;
  auto emit = [&](const fs::path& p, const std::string& content) {
    write_file(p.string(), content);
    written.push_back(p.string());
  };
  emit(fs::path(dir) / "summary.json", bundle.summary.dump(2) + "\n");
  std::string tables;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    emit(fs::path(dir) / fmt::format("ber_{}.csv", delta_tag(deltas[k])), ber_to_csv(bundle.ber[k]));
    tables += ber_table(bundle.ber[k]) + "\n";
  }
  emit(fs::path(dir) / "ber_tables.txt", tables);

  std::vector<std::string> groups = group_labels(ym);
  groups.push_back("overall");
  for (const auto& g : groups) {
    std::vector<detail::Series> series = {
        {ym.algorithm_label(), "#c0392b", "", group_values(ym, g)},
        {y0.algorithm_label(), "#2471a3", "6 4", group_values(y0, g)},
    };
    const std::string tag = g == "overall" ? "overall" : "n" + g;
    std::string ecdf_csv = "algorithm,y,F\n";
    std::string hist_csv = "algorithm,bin_lo,bin_hi,count\n";
    double hi = 0.0;
    for (const auto& se : series)
      for (double v : se.values) hi = std::max(hi, v);
    for (const auto& se : series) {
      for (const auto& p : ecdf(se.values)) ecdf_csv += fmt::format("{},{},{}\n", se.label, p.y, p.f);
      for (const auto& b : histogram(se.values, hi))
        hist_csv += fmt::format("{},{},{},{}\n", se.label, b.lo, b.hi, b.count);
    }
    const std::string title = g == "overall" ? std::string("all instances") : "n = " + g;
    emit(fs::path(dir) / "plots" / fmt::format("ecdf_{}.csv", tag), ecdf_csv);
    emit(fs::path(dir) / "plots" / fmt::format("hist_{}.csv", tag), hist_csv);
    emit(fs::path(dir) / "plots" / fmt::format("ecdf_{}.svg", tag), render_ecdf_svg("ECDF of Y, " + title, series));
    emit(fs::path(dir) / "plots" / fmt::format("hist_{}.svg", tag),
         render_histogram_svg("Histogram of Y, " + title, series));
  }
  return written;
}

}  // namespace placebo
