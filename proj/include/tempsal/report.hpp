/*
 * Copyright 2026 The Tempsal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Report writers: saliency CSV/SVG export, fidelity report (CSV and an
// aligned text table) and runtime tables.

#ifndef TEMPSAL_REPORT_HPP_
#define TEMPSAL_REPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tempsal/data.hpp"
#include "tempsal/evaluation.hpp"

namespace tempsal {

// Header "instance,o,h,j,l,score"; one row per map entry.
inline void write_saliency_csv(std::ostream& out, std::span<const SaliencyMap> maps) {
  out << "instance,o,h,j,l,score\n";
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const MapShape s = maps[i].shape();
    for (std::size_t o = 0; o < s.outputs; ++o) {
      for (std::size_t h = 0; h < s.horizons; ++h) {
        for (std::size_t j = 0; j < s.features; ++j) {
          for (std::size_t l = 0; l < s.lags; ++l) {
            out << i << ',' << o << ',' << h << ',' << j << ',' << l << ','
                << format_double(maps[i](o, h, j, l)) << '\n';
          }
        }
      }
    }
  }
}

// Reads back what write_saliency_csv wrote; every map gets `shape`.
inline std::vector<SaliencyMap> read_saliency_csv(std::istream& in, const MapShape& shape,
                                                  const std::string& method) {
  std::string line;
  if (!std::getline(in, line) || line != "instance,o,h,j,l,score") {
    throw CsvError("saliency CSV: unexpected header");
  }
  std::vector<SaliencyMap> maps;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 6) throw CsvError("saliency CSV row " + std::to_string(row) + ": expected 6 fields");
    std::size_t idx[5];
    for (int f = 0; f < 5; ++f) {
      const auto v = detail::parse_number(fields[f]);
      if (!v || *v < 0) throw CsvError("saliency CSV row " + std::to_string(row) + ": bad index");
      idx[f] = static_cast<std::size_t>(*v);
    }
    const auto score = detail::parse_number(fields[5]);
    if (!score) throw CsvError("saliency CSV row " + std::to_string(row) + ": bad score");
    if (idx[1] >= shape.outputs || idx[2] >= shape.horizons || idx[3] >= shape.features ||
        idx[4] >= shape.lags) {
      throw CsvError("saliency CSV row " + std::to_string(row) + ": index outside the map shape");
    }
    while (maps.size() <= idx[0]) maps.emplace_back(shape, method);
    maps[idx[0]](idx[1], idx[2], idx[3], idx[4]) = *score;
  }
  return maps;
}

// Heatmap of one J x L matrix: lag on the x axis (oldest left), feature on
// the y axis, white (0) to dark red (max).
inline void write_heatmap_svg(std::ostream& out, const Matrix& scores,
                              const std::vector<std::string>& feature_names, const std::string& title) {
  const std::size_t rows = scores.rows(), cols = scores.cols();
  const int cell_w = cols > 48 ? 8 : 16;
  const int cell_h = 20;
  const int left = 90, top = 30;
  const int width = left + static_cast<int>(cols) * cell_w + 20;
  const int height = top + static_cast<int>(rows) * cell_h + 40;
  double peak = 0.0;
  for (double v : scores.values()) peak = std::max(peak, std::abs(v));
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"" << left << "\" y=\"18\">" << title << "</text>\n";
  for (std::size_t j = 0; j < rows; ++j) {
    const std::string name = j < feature_names.size() ? feature_names[j] : "x" + std::to_string(j);
    out << "<text x=\"4\" y=\"" << top + static_cast<int>(j) * cell_h + 14 << "\">" << name << "</text>\n";
    for (std::size_t l = 0; l < cols; ++l) {
      const double t = peak > 0.0 ? std::abs(scores(j, l)) / peak : 0.0;
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      const int r = static_cast<int>(std::lround(255.0 - 100.0 * t));
      out << "<rect x=\"" << left + static_cast<int>(l) * cell_w << "\" y=\""
          << top + static_cast<int>(j) * cell_h << "\" width=\"" << cell_w << "\" height=\"" << cell_h
          << "\" fill=\"rgb(" << r << ',' << g << ',' << g << ")\"><title>j=" << j << " l=" << l
          << " score=" << format_double(scores(j, l)) << "</title></rect>\n";
    }
  }
  const int axis_y = top + static_cast<int>(rows) * cell_h + 16;
  out << "<text x=\"" << left << "\" y=\"" << axis_y << "\">lag 0 (oldest)</text>\n";
  out << "<text x=\"" << left + static_cast<int>(cols) * cell_w << "\" y=\"" << axis_y
      << "\" text-anchor=\"end\">lag " << cols - 1 << " (newest)</text>\n";
  out << "</svg>\n";
}

// Mean of the map over all (o, h) slices.
inline Matrix mean_over_outputs(const SaliencyMap& map) {
  const MapShape s = map.shape();
  Matrix out(s.features, s.lags);
  for (std::size_t k = 0; k < s.slices(); ++k) {
    auto slice = map.slice(k);
    for (std::size_t c = 0; c < s.cells(); ++c) out[c] += slice[c] / static_cast<double>(s.slices());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fidelity report

struct MethodScores {
  std::string method;
  std::vector<double> comp_by_k;
  std::vector<double> suff_by_k;
  double comp = 0.0;
  double suff = 0.0;
  std::uint64_t forward_calls = 0;  // spent producing the maps
};

struct EvalReport {
  std::string metric;  // "AOPCR (absolute output change)" or "AOPC (AUC drop)"
  std::vector<double> grid;
  std::vector<MethodScores> methods;
  std::vector<RankSummary> ranks;  // methods ranked within each k
};

// Scores every method's maps on the same instances; ranks are computed per k
// (comprehensiveness and sufficiency counted separately).
inline EvalReport evaluate_methods(const Predictor& model, std::span<const Matrix> instances,
                                   std::span<const int> labels,
                                   const std::vector<std::pair<std::string, std::vector<SaliencyMap>>>& maps,
                                   const TopKGrid& grid, const BaselineSpec& baseline,
                                   const EvalOptions& options = {}) {
  if (maps.empty()) throw std::invalid_argument("evaluate: no methods to evaluate");
  grid.validate();
  EvalReport report;
  report.grid = grid.percentages;
  const bool classification = model.task() == TaskKind::classification;
  report.metric = classification ? "AOPC (AUC drop)" : "AOPCR (absolute output change)";
  for (const auto& [name, method_maps] : maps) {
    MethodScores scores;
    scores.method = name;
    for (MaskMode mode : {MaskMode::comprehensiveness, MaskMode::sufficiency}) {
      auto by_k = classification
                      ? aopc_by_k(model, instances, labels, method_maps, grid, baseline, mode, options)
                      : aopcr_by_k(model, instances, method_maps, grid, baseline, mode, options);
      const double mean = std::accumulate(by_k.begin(), by_k.end(), 0.0) / static_cast<double>(by_k.size());
      if (mode == MaskMode::comprehensiveness) {
        scores.comp_by_k = std::move(by_k);
        scores.comp = mean;
      } else {
        scores.suff_by_k = std::move(by_k);
        scores.suff = mean;
      }
    }
    report.methods.push_back(std::move(scores));
  }
  std::vector<RankRow> rows;
  for (std::size_t g = 0; g < grid.percentages.size(); ++g) {
    for (const auto& m : report.methods) {
      rows.push_back({"k=" + format_double(grid.percentages[g]), m.method, m.comp_by_k[g], m.suff_by_k[g]});
    }
  }
  report.ranks = average_rank(rows);
  return report;
}

inline std::string format_k(double k) {
  std::ostringstream s;
  s << k;
  return s.str();
}

// One row per method x mode x k, plus an "aopc" row per method x mode.
inline void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "method,mode,k,value\n";
  for (const auto& m : report.methods) {
    for (MaskMode mode : {MaskMode::comprehensiveness, MaskMode::sufficiency}) {
      const auto& by_k = mode == MaskMode::comprehensiveness ? m.comp_by_k : m.suff_by_k;
      for (std::size_t g = 0; g < report.grid.size(); ++g) {
        out << m.method << ',' << mask_mode_name(mode) << ',' << format_k(report.grid[g]) << ','
            << format_double(by_k[g]) << '\n';
      }
      out << m.method << ',' << mask_mode_name(mode) << ",aopc,"
          << format_double(mode == MaskMode::comprehensiveness ? m.comp : m.suff) << '\n';
    }
  }
}

namespace detail {
inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c) out << "  ";
      out << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << rows[i][c];
    }
    out << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out << std::string(total, '-') << '\n';
    }
  }
}
}  // namespace detail

// Comprehensiveness (higher is better) and sufficiency (lower is better) at
// each k, their means, forward calls and the average rank.
inline void write_eval_text(std::ostream& out, const EvalReport& report) {
  out << "Metric: " << report.metric << "\n";
  out << "Comprehensiveness: higher is better. Sufficiency: lower is better.\n\n";
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Method"};
  for (double k : report.grid) header.push_back("comp@" + format_k(k));
  header.push_back("comp");
  for (double k : report.grid) header.push_back("suff@" + format_k(k));
  header.push_back("suff");
  header.push_back("calls");
  header.push_back("rank (avg +- std)");
  rows.push_back(header);
  for (const auto& m : report.methods) {
    std::vector<std::string> r{m.method};
    for (double v : m.comp_by_k) r.push_back(detail::fixed(v));
    r.push_back(detail::fixed(m.comp));
    for (double v : m.suff_by_k) r.push_back(detail::fixed(v));
    r.push_back(detail::fixed(m.suff));
    r.push_back(std::to_string(m.forward_calls));
    std::string rank = "-";
    for (const auto& s : report.ranks) {
      if (s.method == m.method) rank = detail::fixed(s.mean, 2) + " +- " + detail::fixed(s.std, 2);
    }
    r.push_back(rank);
    rows.push_back(std::move(r));
  }
  detail::print_table(out, rows);
}

// Seconds, calls and ratios against the reference method (FA when present,
// otherwise the first row).
inline void write_runtime_csv(std::ostream& out, const std::vector<RuntimeRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("runtime table is empty");
  const RuntimeRow* ref = &rows.front();
  for (const auto& r : rows) {
    if (r.method == "FA") ref = &r;
  }
  out << "method,seconds,forward_calls,gradient_calls,time_ratio_vs_" << ref->method
      << ",call_ratio_vs_" << ref->method << '\n';
  for (const auto& r : rows) {
    const double time_ratio = ref->seconds > 0.0 ? r.seconds / ref->seconds : 0.0;
    const double call_ratio =
        ref->forward_calls > 0 ? static_cast<double>(r.forward_calls) / static_cast<double>(ref->forward_calls)
                               : 0.0;
    out << r.method << ',' << format_double(r.seconds) << ',' << r.forward_calls << ',' << r.gradient_calls
        << ',' << format_double(time_ratio) << ',' << format_double(call_ratio) << '\n';
  }
}

inline void write_runtime_text(std::ostream& out, const std::vector<RuntimeRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("runtime table is empty");
  const RuntimeRow* ref = &rows.front();
  for (const auto& r : rows) {
    if (r.method == "FA") ref = &r;
  }
  std::vector<std::vector<std::string>> table{
      {"Method", "seconds", "forward calls", "gradient calls", "time / " + ref->method, "calls / " + ref->method}};
  for (const auto& r : rows) {
    table.push_back({r.method, detail::fixed(r.seconds, 3), std::to_string(r.forward_calls),
                     std::to_string(r.gradient_calls),
                     detail::fixed(ref->seconds > 0 ? r.seconds / ref->seconds : 0.0, 2),
                     detail::fixed(ref->forward_calls > 0 ? static_cast<double>(r.forward_calls) /
                                                               static_cast<double>(ref->forward_calls)
                                                         : 0.0,
                                   2)});
  }
  detail::print_table(out, table);
}

}  // namespace tempsal

#endif  // TEMPSAL_REPORT_HPP_
