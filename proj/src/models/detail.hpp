#pragma once

#include "recbase/models.hpp"

namespace recbase::detail {

// Builds the factor artifact, precomputing the pruned V V^T when the fold-in
// mode asks for it.
FactorArtifact make_factor_artifact(Eigen::MatrixXd user_factors, Eigen::MatrixXd item_factors,
                                    const FoldInConfig& fold_in);

nlohmann::json to_json(const FoldInConfig& fold_in);

// Bytes needed by a dense n x n double matrix.
inline std::size_t dense_square_bytes(std::size_t n) { return n * n * sizeof(double); }

void check_memory(std::string_view what, std::size_t bytes, std::optional<std::size_t> budget);

}  // namespace recbase::detail
