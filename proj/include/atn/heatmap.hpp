#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "atn/corpus.hpp"
#include "atn/error.hpp"

namespace atn {

// One sentence with any number of attention rows (e.g. beta for the base
// model; alpha/beta/gamma' for fusion). Target span is 1-based inclusive;
// lo = 0 means no target (document-level rows).
struct HeatmapSample {
  std::vector<std::string> tokens;
  std::size_t target_lo = 0;
  std::size_t target_hi = 0;
  std::string pred;
  std::string gold;
  std::vector<std::pair<std::string, AttentionRecord>> rows;
};

namespace detail {

inline std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt6(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace detail

// Standalone HTML: per sample one table, per attention record one row. Cell
// intensity is the weight normalized by the row maximum, so every row uses
// the full dynamic range; the raw weight is kept in a data-w attribute.
// Target tokens are bracketed and bold.
inline std::string heatmap_html(const std::vector<HeatmapSample>& samples) {
  for (const HeatmapSample& s : samples) {
    if (s.tokens.empty()) throw ArgumentError("heatmap: sample with no tokens");
    if (s.target_lo > 0 &&
        (s.target_lo > s.target_hi || s.target_hi > s.tokens.size()))
      throw ArgumentError("heatmap: target span out of bounds");
    for (const auto& [label, rec] : s.rows)
      if (rec.weights.numel() != s.tokens.size())
        throw ArgumentError("heatmap: row '" + label + "' length mismatch");
  }

  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
      "<title>attention</title>\n<style>\n"
      "body { font-family: sans-serif; margin: 1.5em; }\n"
      ".sample { margin-bottom: 1.5em; }\n"
      ".meta { color: #444; margin-bottom: 0.3em; }\n"
      "table { border-collapse: collapse; }\n"
      "th { text-align: right; padding-right: 0.6em; font-weight: normal;\n"
      "     color: #666; font-size: 85%; }\n"
      "td { padding: 2px 5px; white-space: nowrap; }\n"
      "</style>\n</head>\n<body>\n";

  for (const HeatmapSample& s : samples) {
    out += "<div class=\"sample\">\n<div class=\"meta\">pred: <b>" +
           detail::html_escape(s.pred) + "</b> &middot; gold: <b>" +
           detail::html_escape(s.gold) + "</b></div>\n<table>\n";
    for (const auto& [label, rec] : s.rows) {
      double row_max = 0.0;
      for (double w : rec.weights.v) row_max = std::max(row_max, w);
      out += "<tr><th>" + detail::html_escape(label) + "</th>";
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        double w = rec.weights.v[i];
        double intensity = row_max > 0.0 ? w / row_max : 0.0;
        bool in_target = s.target_lo > 0 && i + 1 >= s.target_lo &&
                         i + 1 <= s.target_hi;
        std::string tok = detail::html_escape(s.tokens[i]);
        if (in_target) tok = "<b>[" + tok + "]</b>";
        out += "<td data-w=\"" + detail::fmt6(w) +
               "\" style=\"background:rgba(214,80,49," +
               detail::fmt6(intensity) + ")\">" + tok + "</td>";
      }
      out += "</tr>\n";
    }
    out += "</table>\n</div>\n";
  }
  out += "</body>\n</html>\n";
  return out;
}

inline void export_heatmap(const std::vector<HeatmapSample>& samples,
                           const std::string& path) {
  write_text_file(path, heatmap_html(samples));
}

}  // namespace atn
