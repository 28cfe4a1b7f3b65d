#include "pulsewave/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "pulsewave/common.hpp"
#include "pulsewave/io.hpp"

namespace pulsewave {

Attribution linear_shap(const LinearModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        const Eigen::Ref<const Eigen::RowVectorXd>& background_mean) {
  if (x.size() != background_mean.size()) throw Error(ErrorCode::DimensionMismatch, "row and background differ in length");
  for (auto c : model.columns)
    if (static_cast<Eigen::Index>(c) >= x.size())
      throw Error(ErrorCode::DimensionMismatch, "row is shorter than the model's design");
  Attribution a;
  a.shap.assign(static_cast<std::size_t>(x.size()), 0.0);
  a.base = model.predict(background_mean);
  a.prediction = model.predict(x);
  for (std::size_t j = 0; j < model.columns.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(model.columns[j]);
    a.shap[model.columns[j]] = model.beta[j] * (x(c) - background_mean(c));
  }
  return a;
}

namespace {

struct PathElement {
  int feature;
  double zero;  // fraction of paths flowing through when the feature is absent
  double one;   // 1 if x follows this branch, else 0
  double weight;
};

void extend_path(std::vector<PathElement>& m, double pz, double po, int feature) {
  const std::size_t l = m.size();
  m.push_back({feature, pz, po, l == 0 ? 1.0 : 0.0});
  const double denom = static_cast<double>(l + 1);
  for (std::size_t i = l; i-- > 0;) {
    m[i + 1].weight += po * m[i].weight * static_cast<double>(i + 1) / denom;
    m[i].weight = pz * m[i].weight * static_cast<double>(l - i) / denom;
  }
}

void unwind_path(std::vector<PathElement>& m, std::size_t i) {
  const std::size_t l = m.size() - 1;  // index of the last element
  const double po = m[i].one, pz = m[i].zero;
  double next = m[l].weight;
  const double denom = static_cast<double>(l + 1);
  for (std::size_t j = l; j-- > 0;) {
    if (po != 0.0) {
      const double tmp = m[j].weight;
      m[j].weight = next * denom / (static_cast<double>(j + 1) * po);
      next = tmp - m[j].weight * pz * static_cast<double>(l - j) / denom;
    } else {
      m[j].weight = m[j].weight * denom / (pz * static_cast<double>(l - j));
    }
  }
  for (std::size_t j = i; j < l; ++j) {
    m[j].feature = m[j + 1].feature;
    m[j].zero = m[j + 1].zero;
    m[j].one = m[j + 1].one;
  }
  m.pop_back();
}

// Sum of the weights left after unwinding element i, without modifying m.
double unwound_sum(const std::vector<PathElement>& m, std::size_t i) {
  const std::size_t l = m.size() - 1;
  const double po = m[i].one, pz = m[i].zero;
  const double denom = static_cast<double>(l + 1);
  double total = 0.0;
  if (po != 0.0) {
    double next = m[l].weight;
    for (std::size_t j = l; j-- > 0;) {
      const double w = next * denom / (static_cast<double>(j + 1) * po);
      total += w;
      next = m[j].weight - w * pz * static_cast<double>(l - j) / denom;
    }
  } else {
    for (std::size_t j = l; j-- > 0;) total += m[j].weight * denom / (pz * static_cast<double>(l - j));
  }
  return total;
}

void recurse(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x, std::vector<double>& phi,
             int node, std::vector<PathElement> m, double pz, double po, int feature) {
  extend_path(m, pz, po, feature);
  const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
  if (nd.feature < 0) {
    for (std::size_t i = 1; i < m.size(); ++i)
      phi[static_cast<std::size_t>(m[i].feature)] += unwound_sum(m, i) * (m[i].one - m[i].zero) * nd.value;
    return;
  }
  const bool go_left = x(nd.feature) <= nd.threshold;
  const int hot = go_left ? nd.left : nd.right;
  const int cold = go_left ? nd.right : nd.left;
  double iz = 1.0, io = 1.0;
  for (std::size_t k = 1; k < m.size(); ++k) {
    if (m[k].feature == nd.feature) {
      iz = m[k].zero;
      io = m[k].one;
      unwind_path(m, k);
      break;
    }
  }
  const double cover = nd.cover;
  const double hot_cover = tree.nodes[static_cast<std::size_t>(hot)].cover;
  const double cold_cover = tree.nodes[static_cast<std::size_t>(cold)].cover;
  recurse(tree, x, phi, hot, m, iz * hot_cover / cover, io, nd.feature);
  recurse(tree, x, phi, cold, m, iz * cold_cover / cover, 0.0, nd.feature);
}

}  // namespace

void tree_shap_single(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                      std::vector<double>& phi) {
  recurse(tree, x, phi, 0, {}, 1.0, 1.0, -1);
}

Attribution tree_shap(const ForestModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                      std::size_t n_features) {
  if (static_cast<std::size_t>(x.size()) != n_features)
    throw Error(ErrorCode::DimensionMismatch, "row length differs from the forest's feature count");
  if (model.trees.empty()) throw Error(ErrorCode::Precondition, "forest has no trees");
  for (const auto& t : model.trees)
    for (const auto& nd : t.nodes)
      if (nd.feature >= 0 && static_cast<std::size_t>(nd.feature) >= n_features)
        throw Error(ErrorCode::DimensionMismatch, "forest splits on a feature outside the row");
  Attribution a;
  a.shap.assign(n_features, 0.0);
  double base = 0.0;
  for (const auto& t : model.trees) {
    tree_shap_single(t, x, a.shap);
    base += t.expected_value();
  }
  const double nt = static_cast<double>(model.trees.size());
  for (double& v : a.shap) v /= nt;
  a.base = base / nt;
  a.prediction = model.predict(x);
  return a;
}

GlobalImportance global_importance(const std::vector<Attribution>& attributions, const std::vector<std::string>& names) {
  if (attributions.empty()) throw Error(ErrorCode::EmptyInput, "no attributions");
  const std::size_t p = names.size();
  GlobalImportance g;
  g.names = names;
  g.mean_abs.assign(p, 0.0);
  for (const auto& a : attributions) {
    if (a.shap.size() != p) throw Error(ErrorCode::DimensionMismatch, "attribution length differs from feature names");
    for (std::size_t j = 0; j < p; ++j) g.mean_abs[j] += std::fabs(a.shap[j]);
  }
  for (double& v : g.mean_abs) v /= static_cast<double>(attributions.size());
  g.order.resize(p);
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  std::sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    if (g.mean_abs[a] != g.mean_abs[b]) return g.mean_abs[a] > g.mean_abs[b];
    return names[a] < names[b];
  });
  g.rank.assign(p, 0);
  for (std::size_t r = 0; r < p; ++r) g.rank[g.order[r]] = r + 1;
  return g;
}

std::string attributions_to_csv(const std::vector<Attribution>& attributions, const std::vector<std::string>& sample_ids,
                                const std::vector<std::string>& names, const Eigen::MatrixXd& raw) {
  std::string out = "sample_id,feature,shap_mmHg,raw_value\n";
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      out += sample_ids[i] + "," + names[j] + "," + io::format_double(attributions[i].shap[j]) + "," +
             io::format_double(raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + "\n";
    }
  }
  return out;
}

std::string importance_to_json(const GlobalImportance& g) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto j : g.order) arr.push_back({{"feature", g.names[j]}, {"mean_abs_shap_mmHg", g.mean_abs[j]}, {"rank", g.rank[j]}});
  nlohmann::json root;
  root["ranking"] = arr;
  return root.dump(2) + "\n";
}

}  // namespace pulsewave
