#include "calmath/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace calmath {
namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string center(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  const std::size_t left = (width - s.size()) / 2;
  return std::string(left, ' ') + s + std::string(width - s.size() - left, ' ');
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
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

template <typename T>
std::vector<std::string> first_seen(const std::vector<ReportEntry>& entries, T key) {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), key(e)) == out.end()) out.push_back(key(e));
  return out;
}

constexpr double kPlot = 360.0;
constexpr double kMargin = 50.0;

std::string svg_header(const std::string& title) {
  const double size = kPlot + 2 * kMargin;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(size, 0) + "\" height=\"" +
                  fixed(size, 0) + "\" viewBox=\"0 0 " + fixed(size, 0) + " " + fixed(size, 0) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(size / 2, 1) + "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">" + xml_escape(title) + "</text>\n";
  return s;
}

}  // namespace

std::string format_report_table(const std::vector<ReportEntry>& entries) {
  const auto setups = first_seen(entries, [](const ReportEntry& e) { return e.setup; });
  const auto evals = first_seen(entries, [](const ReportEntry& e) { return e.eval_set; });
  std::map<std::pair<std::string, std::string>, const CalibrationReport*> cell;
  for (const auto& e : entries) cell[{e.setup, e.eval_set}] = &e.report;

  std::size_t label_w = 5;
  for (const auto& s : setups) label_w = std::max(label_w, s.size());
  label_w += 2;
  std::size_t col_w = 18;
  for (const auto& e : evals) col_w = std::max(col_w, e.size() + 2);

  std::string out = pad_right("Setup", label_w);
  for (const auto& e : evals) out += "|" + center(e, col_w);
  out += "\n" + std::string(label_w, ' ');
  const std::size_t half = col_w / 2;
  for (std::size_t i = 0; i < evals.size(); ++i)
    out += "|" + pad_left("MSE", half - 1) + " " + pad_right(pad_left("MAD", half - 1), col_w - half);
  out += "\n" + std::string(label_w, '-');
  for (std::size_t i = 0; i < evals.size(); ++i) out += "+" + std::string(col_w, '-');
  out += "\n";
  for (const auto& s : setups) {
    out += pad_right(s, label_w);
    for (const auto& e : evals) {
      auto it = cell.find({s, e});
      std::string mse_s = "-", mad_s = "-";
      if (it != cell.end()) {
        mse_s = fixed(100.0 * it->second->mse, 1);
        mad_s = fixed(100.0 * it->second->mad, 1);
      }
      out += "|" + pad_left(mse_s, half - 1) + " " + pad_right(pad_left(mad_s, half - 1), col_w - half);
    }
    out += "\n";
  }
  return out;
}

std::string format_bins_csv(const std::vector<ReportEntry>& entries) {
  std::string out = "setup,eval_set,bin,conf,acc,size\n";
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.report.bins.bins.size(); ++i) {
      const auto& b = e.report.bins.bins[i];
      out += csv_field(e.setup) + "," + csv_field(e.eval_set) + "," + std::to_string(i) + "," + fixed(b.conf, 6) +
             "," + fixed(b.acc, 6) + "," + std::to_string(b.size) + "\n";
    }
  }
  return out;
}

std::string reliability_svg(const CalibrationBins& bins, const std::string& title) {
  auto X = [](double v) { return kMargin + v * kPlot; };
  auto Y = [](double v) { return kMargin + (1.0 - v) * kPlot; };
  std::string s = svg_header(title);
  s += "<rect x=\"" + fixed(X(0), 1) + "\" y=\"" + fixed(Y(1), 1) + "\" width=\"" + fixed(kPlot, 1) +
       "\" height=\"" + fixed(kPlot, 1) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fixed(X(0), 1) + "\" y1=\"" + fixed(Y(0), 1) + "\" x2=\"" + fixed(X(1), 1) + "\" y2=\"" +
       fixed(Y(1), 1) + "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  for (int t = 0; t <= 10; t += 2) {
    const double v = t / 10.0;
    s += "<text x=\"" + fixed(X(v), 1) + "\" y=\"" + fixed(Y(0) + 16, 1) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(v, 1) + "</text>\n";
    s += "<text x=\"" + fixed(X(0) - 6, 1) + "\" y=\"" + fixed(Y(v) + 3, 1) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(v, 1) + "</text>\n";
  }
  s += "<text x=\"" + fixed(X(0.5), 1) + "\" y=\"" + fixed(Y(0) + 34, 1) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">confidence</text>\n";
  s += "<text x=\"14\" y=\"" + fixed(Y(0.5), 1) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\" transform=\"rotate(-90 14 " + fixed(Y(0.5), 1) + ")\">accuracy</text>\n";
  std::size_t largest = 1;
  for (const auto& b : bins.bins) largest = std::max(largest, b.size);
  std::string path;
  for (const auto& b : bins.bins) {
    path += (path.empty() ? "M" : " L") + fixed(X(b.conf), 2) + " " + fixed(Y(b.acc), 2);
  }
  if (!path.empty()) s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"steelblue\"/>\n";
  for (const auto& b : bins.bins) {
    const double r = 3.0 + 9.0 * std::sqrt(static_cast<double>(b.size) / static_cast<double>(largest));
    s += "<circle cx=\"" + fixed(X(b.conf), 2) + "\" cy=\"" + fixed(Y(b.acc), 2) + "\" r=\"" + fixed(r, 2) +
         "\" fill=\"steelblue\" fill-opacity=\"0.6\"><title>n=" + std::to_string(b.size) + "</title></circle>\n";
  }
  return s + "</svg>\n";
}

std::string scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title) {
  double lo_x = 0, hi_x = 1, lo_y = 0, hi_y = 1;
  if (!points.empty()) {
    lo_x = hi_x = points[0].x;
    lo_y = hi_y = points[0].y;
    for (const auto& p : points) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
  }
  const double span_x = hi_x - lo_x > 1e-12 ? hi_x - lo_x : 1.0;
  const double span_y = hi_y - lo_y > 1e-12 ? hi_y - lo_y : 1.0;
  auto X = [&](double v) { return kMargin + (v - lo_x) / span_x * kPlot; };
  auto Y = [&](double v) { return kMargin + (1.0 - (v - lo_y) / span_y) * kPlot; };
  std::string s = svg_header(title);
  s += "<rect x=\"" + fixed(kMargin, 1) + "\" y=\"" + fixed(kMargin, 1) + "\" width=\"" + fixed(kPlot, 1) +
       "\" height=\"" + fixed(kPlot, 1) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (const auto& p : points) {
    s += "<circle cx=\"" + fixed(X(p.x), 2) + "\" cy=\"" + fixed(Y(p.y), 2) + "\" r=\"2\" fill=\"" +
         (p.positive ? "green" : "blue") + "\" fill-opacity=\"0.5\"/>\n";
  }
  return s + "</svg>\n";
}

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out += static_cast<char>(std::tolower(u));
    else if (!out.empty() && out.back() != '-') out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "unnamed" : out;
}

}  // namespace calmath
