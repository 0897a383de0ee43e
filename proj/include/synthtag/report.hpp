// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "synthtag/evaluation.hpp"
#include "synthtag/taxonomy.hpp"
#include "synthtag/trainer.hpp"

namespace synthtag {

struct RegimeSummary {
  RegimeKind regime = RegimeKind::E2eReal;
  FoldAggregate aggregate;
};

/// Rows sorted into E2E-real, E2E-synth, E2E-add, E2E-DA, TL, FT order.
std::vector<RegimeSummary> order_rows(std::span<const RegimeSummary> rows);

/// regime,accuracy_mean,accuracy_std,loss_mean,loss_std,folds with
/// round-trip number formatting.
std::string format_report_csv(std::span<const RegimeSummary> rows);
/// Aligned plain text, accuracy as percentages: "46.7% (5.2%)  1.61 (0.05)".
std::string format_report_text(std::span<const RegimeSummary> rows);

/// Writes both forms; rows are reordered. Throws InvalidArgument when empty.
void emit_report(const std::filesystem::path& csv_file, const std::filesystem::path& text_file,
                 std::span<const RegimeSummary> rows);
std::vector<RegimeSummary> read_report_csv(const std::filesystem::path& csv_file);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string genre;
  Domain domain = Domain::Real;
};

struct ScatterOptions {
  /// Genres to draw; empty draws every genre present.
  std::vector<std::string> genres = {std::string(kGenres[0]), std::string(kGenres[1]), std::string(kGenres[2])};
  std::string title;
  int width = 640;
  int height = 480;
};

/// SVG scatter: color by genre, circle = real, triangle = synthetic.
/// Throws EmptyPlot when no point survives the genre filter.
std::string render_scatter_svg(std::span<const ScatterPoint> points, const ScatterOptions& options = {});
void emit_scatter(const std::filesystem::path& svg_file, std::span<const ScatterPoint> points,
                  const ScatterOptions& options = {});

}  // namespace synthtag
