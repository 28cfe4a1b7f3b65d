#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "pulsewave/dataset.hpp"

using namespace pulsewave;
using testutil::code_of;

namespace {

FeatureTable make_table(const std::vector<std::pair<std::string, std::vector<double>>>& cols,
                        const std::vector<double>& sbp = {}) {
  FeatureTable t;
  const std::size_t n = cols.front().second.size();
  for (std::size_t i = 0; i < n; ++i) {
    t.sample_ids.push_back("s" + std::to_string(i));
    t.subject_ids.push_back("p" + std::to_string(i));
  }
  for (const auto& [name, v] : cols) {
    t.columns.push_back(name);
    t.data.push_back(v);
  }
  if (!sbp.empty()) t.targets["SBP"] = sbp;
  return t;
}

double skewness(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double m2 = 0, m3 = 0;
  for (double v : x) {
    m2 += (v - m) * (v - m);
    m3 += (v - m) * (v - m) * (v - m);
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  return m3 / std::pow(m2, 1.5);
}

double plain_r(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

// Two-sided t tail by Simpson integration of the density.
double t_tail_oracle(double t, double dof) {
  const double c = std::exp(std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2)) / std::sqrt(dof * std::numbers::pi);
  const auto pdf = [&](double x) { return c * std::pow(1 + x * x / dof, -(dof + 1) / 2); };
  const int n = 20000;
  const double a = 0.0, b = std::fabs(t), h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(a + i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("log of one is zero and non-positive values are flagged") {
    const auto t = make_table({{"BA", {1.0, std::numbers::e, 0.0, -2.0}}, {"RI", {0.0, 1.0, 2.0, 3.0}}});
    const auto r = log_transform(t, {"BA"});
    CHECK(r.table.column("BA")[0] == 0.0);
    CHECK(r.table.column("BA")[1] == doctest::Approx(1.0));
    CHECK(std::isnan(r.table.column("BA")[2]));
    CHECK(std::isnan(r.table.column("BA")[3]));
    REQUIRE(r.flagged.size() == 2);
    CHECK(r.flagged[0].row == 2);
    CHECK(r.table.column("RI")[0] == 0.0);
    CHECK(r.table.transformed.count("BA") == 1);
  }

  TEST_CASE("log transform reduces lognormal skew") {
    std::mt19937_64 gen(21);
    std::lognormal_distribution<double> ln(0.0, 0.8);
    std::vector<double> x(500);
    for (double& v : x) v = ln(gen);
    const auto r = log_transform(make_table({{"FA", x}}), {"FA"});
    CHECK(std::fabs(skewness(r.table.column("FA"))) < std::fabs(skewness(x)));
  }

  TEST_CASE("default log set leaves AI out") {
    const auto cols = default_log_columns();
    CHECK(std::find(cols.begin(), cols.end(), "AI") == cols.end());
    CHECK(cols.size() == 13);
    CHECK(waveform_columns().size() == 25);
  }

  TEST_CASE("planted HR dependence is removed") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> hr(55, 100);
    std::vector<double> h, f, g;
    for (int i = 0; i < 200; ++i) {
      h.push_back(hr(gen));
      f.push_back(2.0 + 0.1 * h.back());
      g.push_back(std::sin(i * 1.7));
    }
    const auto t = normalize_covariate(make_table({{"HR", h}, {"RI", f}, {"CT", g}}), "HR", 75.0, {"RI", "CT"});
    for (double v : t.column("RI")) CHECK(v == doctest::Approx(9.5));
    // Residual association with HR is gone.
    std::vector<double> resid = t.column("RI");
    double spread = *std::max_element(resid.begin(), resid.end()) - *std::min_element(resid.begin(), resid.end());
    CHECK(spread < 1e-9);
    CHECK(std::fabs(plain_r(t.column("CT"), h)) < 1e-8);
    CHECK(t.column("HR") == h);
  }

  TEST_CASE("uncorrelated feature is barely moved") {
    std::vector<double> h, f;
    for (int i = 0; i < 100; ++i) {
      h.push_back(60 + (i % 10));
      f.push_back(i / 10 % 2 ? 1.0 : -1.0);
    }
    const auto t = normalize_covariate(make_table({{"HR", h}, {"RI", f}}), "HR", 75.0, {"RI"});
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(t.column("RI")[i] == doctest::Approx(f[i]));
  }

  TEST_CASE("constant covariate is an error") {
    const auto t = make_table({{"HR", {70, 70, 70}}, {"RI", {1, 2, 3}}});
    CHECK(code_of([&] { normalize_covariate(t, "HR", 75, {"RI"}); }) == ErrorCode::ConstantCovariate);
  }

  TEST_CASE("SI is untouched by height normalization") {
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    std::mt19937_64 gen(8);
    std::normal_distribution<double> nd;
    for (auto name : kFeatureNames) {
      std::vector<double> v(40);
      for (double& x : v) x = 5 + nd(gen);
      if (name == "Height") for (double& x : v) x = 170 + 10 * nd(gen);
      if (name == "HR") for (double& x : v) x = 75 + 8 * nd(gen);
      cols.emplace_back(std::string(name), v);
    }
    const auto t = make_table(cols);
    const auto hr_only = normalize_covariate(t, "HR", 75.0, waveform_columns());
    const auto both = normalize_features(t);
    CHECK(both.column("SI") == hr_only.column("SI"));
    CHECK(both.column("RI") != hr_only.column("RI"));
  }

  TEST_CASE("IQR fences on 1..9 plus 100") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
    const auto r = iqr_filter(make_table({{"RI", v}}), {"RI"});
    const auto& f = r.fences.at("RI");
    CHECK(f.q1 == doctest::Approx(3.25));
    CHECK(f.q3 == doctest::Approx(7.75));
    CHECK(f.lo == doctest::Approx(-3.5));
    CHECK(f.hi == doctest::Approx(14.5));
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0].row == 9);
    CHECK(r.table.rows() == 9);
  }

  TEST_CASE("identical column keeps every row") {
    const auto r = iqr_filter(make_table({{"RI", std::vector<double>(8, 2.5)}}), {"RI"});
    CHECK(r.removed.empty());
  }

  TEST_CASE("one outlying feature removes the whole row") {
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    for (auto name : kFeatureNames) cols.emplace_back(std::string(name), std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    cols[17].second[3] = 500.0;
    const auto r = iqr_filter(make_table(cols), std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end()));
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0].row == 3);
    CHECK(r.removed[0].columns == std::vector<std::string>{std::string(kFeatureNames[17])});
  }

  TEST_CASE("missing cell removes the row and few rows are rejected") {
    const auto r = iqr_filter(make_table({{"RI", {1, 2, std::nan(""), 4, 5}}}), {"RI"});
    CHECK(r.removed.size() == 1);
    CHECK(code_of([] { iqr_filter(make_table({{"RI", {1, 2, 3}}}), {"RI"}); }) == ErrorCode::TooFewRows);
  }

  TEST_CASE("filtered output is stable under its own fences") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    std::vector<double> a(100), b(100);
    for (double& v : a) v = nd(gen);
    for (double& v : b) v = std::exp(nd(gen));
    const auto r = iqr_filter(make_table({{"RI", a}, {"EA", b}}), {"RI", "EA"});
    for (const auto& name : {"RI", "EA"})
      for (double v : r.table.column(name)) {
        CHECK(v >= r.fences.at(name).lo);
        CHECK(v <= r.fences.at(name).hi);
      }
  }

  TEST_CASE("Bonferroni threshold") {
    CHECK(bonferroni_alpha(0.05, 28) == doctest::Approx(1.7857e-3).epsilon(1e-4));
  }

  TEST_CASE("identity correlation is significant") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto rep = correlations(make_table({{"RI", x}}, x), "SBP", {"RI"}, bonferroni_alpha(0.05, 28));
    REQUIRE(rep.entries.size() == 1);
    CHECK(rep.entries[0].r == doctest::Approx(1.0));
    CHECK(rep.entries[0].significant);
  }

  TEST_CASE("p-value matches an integrated t tail") {
    std::vector<double> x, y;
    std::mt19937_64 gen(6);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 25; ++i) {
      x.push_back(nd(gen));
      y.push_back(0.4 * x.back() + nd(gen));
    }
    const auto t = pearson_test(x, y);
    const double r = plain_r(x, y);
    CHECK(t.r == doctest::Approx(r));
    CHECK(t.p == doctest::Approx(t_tail_oracle(r * std::sqrt(23.0 / (1 - r * r)), 23.0)).epsilon(1e-6));
    CHECK(code_of([] { pearson_test({1, 2}, {1, 2}); }) == ErrorCode::InsufficientData);
  }

  TEST_CASE("permuted column shows no correlation") {
    std::mt19937_64 gen(358);
    std::normal_distribution<double> nd;
    std::vector<double> x(358), y(358);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = nd(gen);
      y[i] = 120 + 10 * x[i] + 3 * nd(gen);
    }
    std::shuffle(x.begin(), x.end(), gen);
    const auto rep = correlations(make_table({{"RI", x}}, y), "SBP", {"RI"}, bonferroni_alpha(0.05, 28));
    CHECK(std::fabs(rep.entries[0].r) < 0.2);
    CHECK_FALSE(rep.entries[0].significant);
  }

  TEST_CASE("no collinear pair keeps every column") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    std::vector<double> a(50), b(50), y(50);
    for (int i = 0; i < 50; ++i) {
      a[i] = nd(gen);
      b[i] = nd(gen);
      y[i] = a[i] + b[i];
    }
    const auto r = prune_collinear(make_table({{"CT", a}, {"NT", b}}, y), "SBP", {"CT", "NT"});
    CHECK(r.retained == std::vector<std::string>{"CT", "NT"});
  }

  TEST_CASE("near copy of the stronger column is dropped") {
    std::mt19937_64 gen(12);
    std::normal_distribution<double> nd;
    std::vector<double> x1(80), x2(80), y(80);
    for (int i = 0; i < 80; ++i) {
      x1[i] = nd(gen);
      x2[i] = x1[i] + 0.05 * nd(gen);
      y[i] = x1[i] + 0.3 * nd(gen);
    }
    REQUIRE(std::fabs(plain_r(x1, y)) > std::fabs(plain_r(x2, y)));
    const auto r = prune_collinear(make_table({{"CT", x1}, {"NT", x2}}, y), "SBP", {"CT", "NT"});
    CHECK(r.retained == std::vector<std::string>{"CT"});
    REQUIRE(r.dropped.size() == 1);
    CHECK(r.dropped[0].column == "NT");
  }

  TEST_CASE("pruned sets have no pair above the threshold") {
    std::mt19937_64 gen(77);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::pair<std::string, std::vector<double>>> cols;
      std::vector<std::string> names;
      std::vector<double> base(60), y(60);
      for (int i = 0; i < 60; ++i) {
        base[i] = nd(gen);
        y[i] = base[i] + nd(gen);
      }
      for (int c = 0; c < 6; ++c) {
        std::vector<double> v(60);
        const double mix = 0.2 + 0.15 * c;
        for (int i = 0; i < 60; ++i) v[i] = base[i] + mix * nd(gen) * (c % 2 ? 3.0 : 1.0);
        names.push_back("c" + std::to_string(c));
        cols.emplace_back(names.back(), v);
      }
      const auto t = make_table(cols, y);
      const auto r = prune_collinear(t, "SBP", names);
      CHECK(r.retained.size() + r.dropped.size() == names.size());
      for (std::size_t i = 0; i < r.retained.size(); ++i)
        for (std::size_t j = i + 1; j < r.retained.size(); ++j)
          CHECK(std::fabs(plain_r(t.column(r.retained[i]), t.column(r.retained[j]))) <= 0.7);
    }
  }

  TEST_CASE("RI gives way to ARI by default") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    std::vector<double> ri(40), ari(40), y(40);
    for (int i = 0; i < 40; ++i) {
      ri[i] = nd(gen);
      ari[i] = nd(gen);
      y[i] = ri[i] + ari[i];
    }
    const auto t = make_table({{"RI", ri}, {"ARI", ari}}, y);
    const auto r = prune_collinear(t, "SBP", {"RI", "ARI"});
    CHECK(r.retained == std::vector<std::string>{"ARI"});
    CHECK(r.dropped[0].reason == "override");
    CHECK(prune_collinear(t, "SBP", {"RI", "ARI"}, 0.7, {}).retained.size() == 2);
  }

  TEST_CASE("features CSV round-trip keeps targets and PP") {
    const auto csv = std::string("sample_id,subject_id,Height,HR,RI,SBP,DBP\n") + "a,p1,170,70,0.5,120,80\n" +
                     "b,p2,160,NA,0.6,130,NA\n";
    const auto t = parse_features_csv(csv);
    CHECK(t.rows() == 2);
    CHECK(t.target("PP")[0] == 40.0);
    CHECK(std::isnan(t.target("PP")[1]));
    CHECK(std::isnan(t.column("HR")[1]));
    const auto again = parse_features_csv(features_table_to_csv(t));
    CHECK(again.column("RI") == t.column("RI"));
    CHECK(again.sample_ids == t.sample_ids);
  }
}
