#include "pulsewave/cli/report.hpp"

#include <algorithm>
#include <cmath>

#include "pulsewave/io.hpp"

namespace pulsewave::cli {

namespace {

std::string f(double v) { return io::format_double(std::round(v * 100.0) / 100.0); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string header(double w, double h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(w) + "\" height=\"" + f(h) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + f(w / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
         "</text>\n";
}

}  // namespace

std::string scatter_svg(const std::vector<double>& predicted, const std::vector<double>& reference,
                        const std::string& title) {
  const double w = 480, h = 480, m = 60;
  double lo = 0.0, hi = 1.0;
  if (!predicted.empty()) {
    lo = std::min(*std::min_element(predicted.begin(), predicted.end()),
                  *std::min_element(reference.begin(), reference.end()));
    hi = std::max(*std::max_element(predicted.begin(), predicted.end()),
                  *std::max_element(reference.begin(), reference.end()));
  }
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const auto sx = [&](double x) { return m + (x - lo) / (hi - lo) * (w - 2 * m); };
  const auto sy = [&](double y) { return h - m - (y - lo) / (hi - lo) * (h - 2 * m); };
  std::string s = header(w, h, title);
  s += "<rect x=\"" + f(m) + "\" y=\"" + f(m) + "\" width=\"" + f(w - 2 * m) + "\" height=\"" + f(h - 2 * m) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + f(sx(lo)) + "\" y1=\"" + f(sy(lo)) + "\" x2=\"" + f(sx(hi)) + "\" y2=\"" + f(sy(hi)) +
       "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  for (std::size_t i = 0; i < predicted.size(); ++i)
    s += "<circle cx=\"" + f(sx(reference[i])) + "\" cy=\"" + f(sy(predicted[i])) +
         "\" r=\"2.5\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  s += "<text x=\"" + f(w / 2) + "\" y=\"" + f(h - 20) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">reference (mmHg)</text>\n";
  s += "<text x=\"18\" y=\"" + f(h / 2) + "\" transform=\"rotate(-90 18 " + f(h / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">predicted (mmHg)</text>\n";
  s += "<text x=\"" + f(m) + "\" y=\"" + f(h - m + 16) + "\" font-family=\"sans-serif\" font-size=\"10\">" + f(lo) +
       "</text>\n";
  s += "<text x=\"" + f(w - m) + "\" y=\"" + f(h - m + 16) +
       "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + f(hi) + "</text>\n";
  s += "</svg>\n";
  return s;
}

std::string importance_svg(const GlobalImportance& g, const std::string& title) {
  const double bar = 18, ml = 90, mr = 60, mt = 40;
  const double w = 560, h = mt + bar * static_cast<double>(g.order.size()) + 20;
  double top = 0.0;
  for (double v : g.mean_abs) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  std::string s = header(w, h, title);
  double y = mt;
  for (std::size_t idx : g.order) {
    const double len = g.mean_abs[idx] / top * (w - ml - mr);
    s += "<text x=\"" + f(ml - 6) + "\" y=\"" + f(y + bar * 0.7) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + escape(g.names[idx]) + "</text>\n";
    s += "<rect x=\"" + f(ml) + "\" y=\"" + f(y + 2) + "\" width=\"" + f(len) + "\" height=\"" + f(bar - 4) +
         "\" fill=\"steelblue\"/>\n";
    s += "<text x=\"" + f(ml + len + 4) + "\" y=\"" + f(y + bar * 0.7) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + f(g.mean_abs[idx]) + "</text>\n";
    y += bar;
  }
  s += "</svg>\n";
  return s;
}

std::string predictions_csv(const std::vector<std::string>& sample_ids, const CVResult& cv) {
  std::string out = "sample_id,reference,predicted,fold\n";
  for (std::size_t i = 0; i < cv.predicted.size(); ++i)
    out += sample_ids[i] + "," + io::format_double(cv.reference[i]) + "," + io::format_double(cv.predicted[i]) + "," +
           std::to_string(cv.fold[i]) + "\n";
  return out;
}

}  // namespace pulsewave::cli
