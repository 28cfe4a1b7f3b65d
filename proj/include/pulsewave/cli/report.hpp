#pragma once

#include <string>
#include <vector>

#include "pulsewave/explain.hpp"
#include "pulsewave/models.hpp"

namespace pulsewave::cli {

// Predicted against reference with the identity line.
std::string scatter_svg(const std::vector<double>& predicted, const std::vector<double>& reference,
                        const std::string& title);

// Horizontal bars of mean |SHAP|, most important on top.
std::string importance_svg(const GlobalImportance& g, const std::string& title);

// Rows `sample_id,reference,predicted,fold`.
std::string predictions_csv(const std::vector<std::string>& sample_ids, const CVResult& cv);

}  // namespace pulsewave::cli
