/* Copyright 2026 The ascprobe Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <fmt/format.h>

#include <algorithm>

#include "ascprobe/pipeline.hpp"

namespace ascprobe::pipeline {

using corpus::Construction;

namespace {

// Legend colors of the reference figures.
std::string_view color_of(Construction c) {
  switch (c) {
    case Construction::CausedMotion: return "#1f77b4";  // blue
    case Construction::Ditransitive: return "#2ca02c";  // green
    case Construction::Transitive: return "#d62728";    // red
    case Construction::Resultative: return "#ff7f0e";   // orange
  }
  return "#000000";
}

std::string display_name(Construction c) {
  switch (c) {
    case Construction::CausedMotion: return "caused-motion";
    case Construction::Ditransitive: return "ditransitive";
    case Construction::Transitive: return "transitive";
    case Construction::Resultative: return "resultative";
  }
  return "?";
}

}  // namespace

std::string projection_csv(const geometry::ProjectionResult& projection,
                           const std::vector<Construction>& labels) {
  std::string out = "index,label,x,y\n";
  const auto& c = projection.coords;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double x = c.cols() > 0 ? c(i, 0) : 0.0;
    const double y = c.cols() > 1 ? c(i, 1) : 0.0;
    out += fmt::format("{},{},{},{}\n", i, corpus::label_name(labels[static_cast<std::size_t>(i)]),
                       x, y);
  }
  return out;
}

std::string projection_svg(const geometry::ProjectionResult& projection,
                           const std::vector<Construction>& labels, const std::string& title) {
  constexpr double kSize = 480.0;
  constexpr double kMargin = 40.0;
  constexpr double kLegendWidth = 130.0;
  const auto& c = projection.coords;

  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  if (c.rows() > 0 && c.cols() >= 2) {
    min_x = c.col(0).minCoeff();
    max_x = c.col(0).maxCoeff();
    min_y = c.col(1).minCoeff();
    max_y = c.col(1).maxCoeff();
  }
  const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
  const double scale = (kSize - 2.0 * kMargin) / span;
  const double cx = 0.5 * (min_x + max_x);
  const double cy = 0.5 * (min_y + max_y);

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
      kSize + kLegendWidth, kSize);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\" "
      "text-anchor=\"middle\">{}</text>\n",
      0.5 * kSize, title);
  out += fmt::format(
      "<rect x=\"{0:.1f}\" y=\"{0:.1f}\" width=\"{1:.1f}\" height=\"{1:.1f}\" fill=\"none\" "
      "stroke=\"#999999\"/>\n",
      kMargin, kSize - 2.0 * kMargin);
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double x = c.cols() > 0 ? c(i, 0) : 0.0;
    const double y = c.cols() > 1 ? c(i, 1) : 0.0;
    const double px = 0.5 * kSize + (x - cx) * scale;
    const double py = 0.5 * kSize - (y - cy) * scale;
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\" "
                       "fill-opacity=\"0.7\"/>\n",
                       px, py, color_of(labels[static_cast<std::size_t>(i)]));
  }
  double ly = kMargin + 10.0;
  for (Construction k : {Construction::CausedMotion, Construction::Ditransitive,
                         Construction::Transitive, Construction::Resultative}) {
    out += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"5\" fill=\"{}\"/>\n",
                       kSize + 10.0, ly, color_of(k));
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        kSize + 20.0, ly + 4.0, display_name(k));
    ly += 20.0;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ascprobe::pipeline
