#include "pulsewave/agreement.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

AamiGrade grade_aami(double w5, double w10, double w15, const AamiThresholds& th) {
  AamiGrade g;
  g.within5_pct = w5;
  g.within10_pct = w10;
  g.within15_pct = w15;
  const std::array<double, 3> got{w5, w10, w15};
  const auto& need = th.required_pct;
  g.pass = true;
  for (std::size_t i = 0; i < 3; ++i) {
    g.meets[i] = got[i] >= need[i];
    g.margins[i] = got[i] - need[i];
    g.pass = g.pass && g.meets[i];
  }
  return g;
}

AamiGrade grade_aami(const AgreementReport& r, const AamiThresholds& th) {
  return grade_aami(r.aami.within5_pct, r.aami.within10_pct, r.aami.within15_pct, th);
}

AgreementReport bland_altman(const std::vector<double>& predicted, const std::vector<double>& reference,
                             const AamiThresholds& th) {
  if (predicted.size() != reference.size())
    throw Error(ErrorCode::LengthMismatch, "predicted and reference lengths differ");
  const std::size_t n = predicted.size();
  if (n < 3) throw Error(ErrorCode::TooFewRows, "Bland-Altman needs at least 3 pairs");
  AgreementReport r;
  r.n = n;
  r.means.resize(n);
  r.differences.resize(n);
  std::vector<double> ae(n);
  std::size_t w5 = 0, w10 = 0, w15 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r.differences[i] = predicted[i] - reference[i];
    r.means[i] = 0.5 * (predicted[i] + reference[i]);
    ae[i] = std::fabs(r.differences[i]);
    const auto& lim = th.limits_mmHg;
    const std::size_t bin = ae[i] <= lim[0] ? 0 : ae[i] <= lim[1] ? 1 : ae[i] <= lim[2] ? 2 : 3;
    ++r.bin_counts[bin];
    w5 += ae[i] <= lim[0];
    w10 += ae[i] <= lim[1];
    w15 += ae[i] <= lim[2];
  }
  r.mean_error = mean(r.differences);
  r.sd_error = sample_sd(r.differences);
  r.loa_lower = r.mean_error - 1.96 * r.sd_error;
  r.loa_upper = r.mean_error + 1.96 * r.sd_error;
  r.mae = mean(ae);
  r.sd_ae = sample_sd(ae);
  const double nn = static_cast<double>(n);
  for (std::size_t b = 0; b < 4; ++b) r.bin_pct[b] = 100.0 * static_cast<double>(r.bin_counts[b]) / nn;
  r.aami = grade_aami(100.0 * static_cast<double>(w5) / nn, 100.0 * static_cast<double>(w10) / nn,
                      100.0 * static_cast<double>(w15) / nn, th);

  // Proportional bias: OLS of difference on mean.
  const double mx = mean(r.means), my = r.mean_error;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (r.means[i] - mx) * (r.means[i] - mx);
    sxy += (r.means[i] - mx) * (r.differences[i] - my);
  }
  if (sxx > 0.0) {
    r.bias_slope = sxy / sxx;
    r.bias_intercept = my - r.bias_slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = r.differences[i] - r.bias_intercept - r.bias_slope * r.means[i];
      rss += e * e;
    }
    const double dof = nn - 2.0;
    const double se = std::sqrt(rss / dof / sxx);
    if (se > 0.0)
      r.bias_p = t_two_sided_p(r.bias_slope / se, dof);
    else
      r.bias_p = std::fabs(r.bias_slope) > 0.0 ? 0.0 : 1.0;
  } else {
    r.bias_slope = 0.0;
    r.bias_intercept = my;
    r.bias_p = 1.0;
  }
  return r;
}

std::string agreement_to_json(const AgreementReport& r, const AamiThresholds& th) {
  nlohmann::json j;
  j["n"] = r.n;
  j["mean_error_mmHg"] = r.mean_error;
  j["sd_error_mmHg"] = r.sd_error;
  j["limits_of_agreement_mmHg"] = {r.loa_lower, r.loa_upper};
  j["mae_mmHg"] = r.mae;
  j["sd_ae_mmHg"] = r.sd_ae;
  j["bias_regression"] = {{"slope", r.bias_slope}, {"intercept", r.bias_intercept}, {"p", r.bias_p}};
  const auto f = [](double v) { return io::format_double(v); };
  const auto& lim = th.limits_mmHg;
  const std::string labels[4] = {"[0," + f(lim[0]) + "]", "(" + f(lim[0]) + "," + f(lim[1]) + "]",
                                 "(" + f(lim[1]) + "," + f(lim[2]) + "]", "(" + f(lim[2]) + ",inf)"};
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t b = 0; b < 4; ++b)
    bins.push_back({{"range_mmHg", labels[b]}, {"count", r.bin_counts[b]}, {"percent", r.bin_pct[b]}});
  j["ae_bins"] = bins;
  j["aami"] = {{"within5_pct", r.aami.within5_pct},
               {"within10_pct", r.aami.within10_pct},
               {"within15_pct", r.aami.within15_pct},
               {"meets", r.aami.meets},
               {"margins_pct", r.aami.margins},
               {"limits_mmHg", lim},
               {"required_pct", th.required_pct},
               {"pass", r.aami.pass}};
  return j.dump(2) + "\n";
}

std::string agreement_plot_csv(const AgreementReport& r) {
  std::string out = "mean,difference\n";
  for (std::size_t i = 0; i < r.n; ++i)
    out += io::format_double(r.means[i]) + "," + io::format_double(r.differences[i]) + "\n";
  return out;
}

std::string agreement_svg(const AgreementReport& r, const std::string& title) {
  const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;
  double xmin = *std::min_element(r.means.begin(), r.means.end());
  double xmax = *std::max_element(r.means.begin(), r.means.end());
  double ymin = std::min(r.loa_lower, *std::min_element(r.differences.begin(), r.differences.end()));
  double ymax = std::max(r.loa_upper, *std::max_element(r.differences.begin(), r.differences.end()));
  if (xmax - xmin < 1e-9) { xmin -= 1; xmax += 1; }
  if (ymax - ymin < 1e-9) { ymin -= 1; ymax += 1; }
  const double padx = 0.05 * (xmax - xmin), pady = 0.08 * (ymax - ymin);
  xmin -= padx; xmax += padx; ymin -= pady; ymax += pady;
  const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  const auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  const auto f = [](double v) { return io::format_double(std::round(v * 100.0) / 100.0); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(w) + "\" height=\"" + f(h) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + f(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       title + "</text>\n";
  s += "<line x1=\"" + f(ml) + "\" y1=\"" + f(h - mb) + "\" x2=\"" + f(w - mr) + "\" y2=\"" + f(h - mb) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + f(ml) + "\" y1=\"" + f(mt) + "\" x2=\"" + f(ml) + "\" y2=\"" + f(h - mb) + "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < r.n; ++i)
    s += "<circle cx=\"" + f(sx(r.means[i])) + "\" cy=\"" + f(sy(r.differences[i])) +
         "\" r=\"2.5\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  const auto hline = [&](double y, const char* colour, const std::string& label) {
    s += "<line x1=\"" + f(ml) + "\" y1=\"" + f(sy(y)) + "\" x2=\"" + f(w - mr) + "\" y2=\"" + f(sy(y)) +
         "\" stroke=\"" + colour + "\" stroke-dasharray=\"6,4\"/>\n";
    s += "<text x=\"" + f(w - mr - 4) + "\" y=\"" + f(sy(y) - 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + label + "</text>\n";
  };
  hline(r.mean_error, "black", "mean " + f(r.mean_error));
  hline(r.loa_upper, "firebrick", "+1.96 SD " + f(r.loa_upper));
  hline(r.loa_lower, "firebrick", "-1.96 SD " + f(r.loa_lower));
  s += "<text x=\"" + f(w / 2) + "\" y=\"" + f(h - 12) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">mean of predicted and reference (mmHg)</text>\n";
  s += "<text x=\"16\" y=\"" + f(h / 2) + "\" transform=\"rotate(-90 16 " + f(h / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">predicted - reference (mmHg)</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace pulsewave
