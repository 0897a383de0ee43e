// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "synthtag/csv.hpp"
#include "synthtag/error.hpp"

namespace synthtag {
namespace {

std::size_t regime_rank(RegimeKind k) {
  return static_cast<std::size_t>(std::find(std::begin(kAllRegimes), std::end(kAllRegimes), k) - std::begin(kAllRegimes));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (!file.parent_path().empty()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + file.string());
}

std::string xml_escape(const std::string& s) {
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

int genre_slot(const std::string& genre) {
  const auto g = genre_index(genre);
  return g ? *g : -1;
}

constexpr const char* kPalette[kGenreCount] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::vector<RegimeSummary> order_rows(std::span<const RegimeSummary> rows) {
  std::vector<RegimeSummary> out(rows.begin(), rows.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return regime_rank(a.regime) < regime_rank(b.regime); });
  return out;
}

std::string format_report_csv(std::span<const RegimeSummary> rows) {
  std::string out = csv::format_row({"regime", "accuracy_mean", "accuracy_std", "loss_mean", "loss_std", "folds"}) + "\n";
  for (const auto& r : order_rows(rows)) {
    out += csv::format_row({std::string(display_name(r.regime)), csv::format_number(r.aggregate.accuracy.mean),
                            csv::format_number(r.aggregate.accuracy.std), csv::format_number(r.aggregate.loss.mean),
                            csv::format_number(r.aggregate.loss.std), std::to_string(r.aggregate.folds)}) +
           "\n";
  }
  return out;
}

std::string format_report_text(std::span<const RegimeSummary> rows) {
  std::vector<std::array<std::string, 3>> cells{{"Regime", "Accuracy mu (sigma)", "Loss mu (sigma)"}};
  for (const auto& r : order_rows(rows)) {
    const auto& a = r.aggregate;
    cells.push_back({std::string(display_name(r.regime)),
                     fixed(100.0 * a.accuracy.mean, 1) + "% (" + fixed(100.0 * a.accuracy.std, 1) + "%)",
                     fixed(a.loss.mean, 2) + " (" + fixed(a.loss.std, 2) + ")"});
  }
  std::array<std::size_t, 3> width{};
  for (const auto& row : cells)
    for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      out << cells[i][c];
      if (c + 1 < 3) out << std::string(width[c] - cells[i][c].size() + 2, ' ');
    }
    out << '\n';
    if (i == 0) out << std::string(width[0] + width[1] + width[2] + 4, '-') << '\n';
  }
  return out.str();
}

void emit_report(const std::filesystem::path& csv_file, const std::filesystem::path& text_file,
                 std::span<const RegimeSummary> rows) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "report needs at least one regime");
  write_text(csv_file, format_report_csv(rows));
  write_text(text_file, format_report_text(rows));
}

std::vector<RegimeSummary> read_report_csv(const std::filesystem::path& csv_file) {
  const auto rows = csv::read_file(csv_file);
  std::vector<RegimeSummary> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 6) throw Error(ErrorCode::UnreadableFile, csv_file.string() + ": malformed report row");
    RegimeSummary s;
    s.regime = parse_regime(row[0]);
    s.aggregate.accuracy = {std::stod(row[1]), std::stod(row[2])};
    s.aggregate.loss = {std::stod(row[3]), std::stod(row[4])};
    s.aggregate.folds = std::stoul(row[5]);
    out.push_back(s);
  }
  return out;
}

std::string render_scatter_svg(std::span<const ScatterPoint> points, const ScatterOptions& options) {
  std::set<std::string> keep(options.genres.begin(), options.genres.end());
  std::vector<const ScatterPoint*> shown;
  for (const auto& p : points)
    if (keep.empty() || keep.count(p.genre)) shown.push_back(&p);
  if (shown.empty()) throw Error(ErrorCode::EmptyPlot, "no points to plot");

  double x0 = shown[0]->x, x1 = x0, y0 = shown[0]->y, y1 = y0;
  for (const auto* p : shown) {
    x0 = std::min(x0, p->x), x1 = std::max(x1, p->x);
    y0 = std::min(y0, p->y), y1 = std::max(y1, p->y);
  }
  const double W = options.width, H = options.height, margin = 40.0, legend = 130.0;
  const double sx = (x1 > x0) ? (W - 2 * margin - legend) / (x1 - x0) : 0.0;
  const double sy = (y1 > y0) ? (H - 2 * margin) / (y1 - y0) : 0.0;
  auto px = [&](double x) { return sx > 0 ? margin + (x - x0) * sx : (W - legend) / 2; };
  auto py = [&](double y) { return sy > 0 ? H - margin - (y - y0) * sy : H / 2; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(options.title)
        << "</text>\n";
  }
  std::vector<std::string> genres_seen;
  for (const auto* p : shown) {
    const int g = genre_slot(p->genre);
    const char* color = g >= 0 ? kPalette[g] : "#000000";
    if (std::find(genres_seen.begin(), genres_seen.end(), p->genre) == genres_seen.end()) genres_seen.push_back(p->genre);
    const double cx = px(p->x), cy = py(p->y);
    if (p->domain == Domain::Real) {
      svg << "<circle class=\"real\" cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"3.5\" fill=\"" << color
          << "\" data-genre=\"" << xml_escape(p->genre) << "\"/>\n";
    } else {
      svg << "<polygon class=\"synthetic\" points=\"" << cx << ',' << cy - 4.5 << ' ' << cx - 4 << ',' << cy + 3
          << ' ' << cx + 4 << ',' << cy + 3 << "\" fill=\"" << color << "\" data-genre=\"" << xml_escape(p->genre)
          << "\"/>\n";
    }
  }
  std::sort(genres_seen.begin(), genres_seen.end(),
            [](const std::string& a, const std::string& b) { return genre_slot(a) < genre_slot(b); });
  double ly = margin;
  const double lx = W - legend + 10;
  for (const auto& g : genres_seen) {
    const int gi = genre_slot(g);
    svg << "<rect x=\"" << lx << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
        << (gi >= 0 ? kPalette[gi] : "#000000") << "\"/><text x=\"" << lx + 16 << "\" y=\"" << ly
        << "\" font-size=\"12\">" << xml_escape(g) << "</text>\n";
    ly += 18;
  }
  svg << "<circle cx=\"" << lx + 5 << "\" cy=\"" << ly - 3 << "\" r=\"3.5\" fill=\"#444\"/><text x=\"" << lx + 16
      << "\" y=\"" << ly << "\" font-size=\"12\">real</text>\n";
  ly += 18;
  svg << "<polygon points=\"" << lx + 5 << ',' << ly - 7.5 << ' ' << lx + 1 << ',' << ly << ' ' << lx + 9 << ','
      << ly << "\" fill=\"#444\"/><text x=\"" << lx + 16 << "\" y=\"" << ly << "\" font-size=\"12\">synthetic</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void emit_scatter(const std::filesystem::path& svg_file, std::span<const ScatterPoint> points,
                  const ScatterOptions& options) {
  write_text(svg_file, render_scatter_svg(points, options));
}

}  // namespace synthtag
