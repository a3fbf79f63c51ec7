#pragma once

#include <utility>
#include <vector>

#include "recbase/rng.hpp"

namespace recbase::detail {

// Extremely randomized regression trees. Mean and spread of the per-tree
// predictions serve as the surrogate's posterior.
class ExtraTrees {
 public:
  ExtraTrees(std::size_t n_trees, std::size_t min_samples_split = 2) : n_trees_(n_trees), min_split_(min_samples_split) {}

  void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y, SeededRng& rng);
  // (mean, standard deviation) across trees.
  std::pair<double, double> predict(const std::vector<double>& x) const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };
  using Tree = std::vector<Node>;

  std::size_t grow(Tree& tree, const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, SeededRng& rng) const;

  std::size_t n_trees_;
  std::size_t min_split_;
  std::vector<Tree> trees_;
};

// Expected improvement over `best` for maximization, with exploration
// offset xi.
double expected_improvement(double mean, double sd, double best, double xi = 0.01);

}  // namespace recbase::detail
