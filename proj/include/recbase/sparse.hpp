#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "recbase/common.hpp"

namespace recbase {

struct Triplet {
  Index row;
  Index col;
  double value;
};

// Read-only view of one compressed row; indices strictly increasing.
struct SparseRowView {
  std::span<const Index> indices;
  std::span<const double> values;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

// Compressed sparse row matrix of doubles. Rows are sorted by column index
// and hold no duplicate columns. Immutable after construction.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols);
  // Takes ownership of already-compressed storage. Validates shape, ordering
  // and index ranges.
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
            std::vector<Index> indices, std::vector<double> values);

  // Duplicate coordinates are summed. Explicit zeros are kept.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static CsrMatrix from_dense(const Eigen::MatrixXd& dense, double drop_below = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return indices_.size(); }

  SparseRowView row(std::size_t r) const;
  std::size_t row_size(std::size_t r) const { return indptr_[r + 1] - indptr_[r]; }
  // Binary search; 0 when absent.
  double at(std::size_t r, std::size_t c) const;

  CsrMatrix transpose() const;
  Eigen::MatrixXd to_dense() const;
  std::vector<Triplet> triplets() const;

  const std::vector<std::size_t>& indptr() const noexcept { return indptr_; }
  const std::vector<Index>& indices() const noexcept { return indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> indptr_{0};
  std::vector<Index> indices_;
  std::vector<double> values_;
};

// Appends rows in order; each row's entries may arrive unsorted.
class CsrBuilder {
 public:
  CsrBuilder(std::size_t rows, std::size_t cols);
  void push(Index col, double value);
  void finish_row();
  // Appends a whole, already-sorted row.
  void append_row(std::span<const Index> indices, std::span<const double> values);
  CsrMatrix build() &&;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t row_start_ = 0;
  std::vector<std::size_t> indptr_{0};
  std::vector<Index> indices_;
  std::vector<double> values_;
};

// Dense = sparse * dense (rows of `a` times `b`).
Eigen::MatrixXd multiply(const CsrMatrix& a, const Eigen::MatrixXd& b);
// Dense = sparse^T * dense without materializing the transpose.
Eigen::MatrixXd multiply_transposed(const CsrMatrix& a, const Eigen::MatrixXd& b);

}  // namespace recbase
