#include "recbase/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace recbase {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), indptr_(rows + 1, 0) {}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
                     std::vector<Index> indices, std::vector<double> values)
    : rows_(rows), cols_(cols), indptr_(std::move(indptr)), indices_(std::move(indices)),
      values_(std::move(values)) {
  if (indptr_.size() != rows_ + 1 || indptr_.front() != 0 || indptr_.back() != indices_.size() ||
      indices_.size() != values_.size()) {
    throw Error("CsrMatrix: inconsistent compressed storage");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (indptr_[r] > indptr_[r + 1]) throw Error("CsrMatrix: indptr not monotone");
    for (std::size_t p = indptr_[r]; p < indptr_[r + 1]; ++p) {
      if (indices_[p] >= cols_) throw Error(fmt::format("CsrMatrix: column {} out of range", indices_[p]));
      if (p > indptr_[r] && indices_[p - 1] >= indices_[p]) {
        throw Error(fmt::format("CsrMatrix: row {} not strictly sorted", r));
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw Error(fmt::format("CsrMatrix: triplet ({}, {}) outside {}x{}", t.row, t.col, rows, cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  CsrMatrix m(rows, cols);
  m.indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      m.values_.back() += t.value;
      continue;
    }
    m.indices_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.indptr_[t.row + 1];
  }
  std::partial_sum(m.indptr_.begin(), m.indptr_.end(), m.indptr_.begin());
  return m;
}

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense, double drop_below) {
  CsrBuilder b(static_cast<std::size_t>(dense.rows()), static_cast<std::size_t>(dense.cols()));
  for (Eigen::Index r = 0; r < dense.rows(); ++r) {
    for (Eigen::Index c = 0; c < dense.cols(); ++c) {
      const double v = dense(r, c);
      if (v != 0.0 && std::abs(v) >= drop_below) b.push(static_cast<Index>(c), v);
    }
    b.finish_row();
  }
  return std::move(b).build();
}

SparseRowView CsrMatrix::row(std::size_t r) const {
  const std::size_t begin = indptr_[r];
  const std::size_t len = indptr_[r + 1] - begin;
  return {std::span<const Index>(indices_.data() + begin, len),
          std::span<const double>(values_.data() + begin, len)};
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  const auto v = row(r);
  const auto it = std::lower_bound(v.indices.begin(), v.indices.end(), static_cast<Index>(c));
  if (it == v.indices.end() || *it != c) return 0.0;
  return v.values[static_cast<std::size_t>(it - v.indices.begin())];
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t(cols_, rows_);
  t.indices_.resize(nnz());
  t.values_.resize(nnz());
  for (Index c : indices_) ++t.indptr_[c + 1];
  std::partial_sum(t.indptr_.begin(), t.indptr_.end(), t.indptr_.begin());
  std::vector<std::size_t> cursor(t.indptr_.begin(), t.indptr_.end() - 1);
  // Walking rows in increasing order keeps every output row sorted.
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = indptr_[r]; p < indptr_[r + 1]; ++p) {
      const std::size_t dst = cursor[indices_[p]]++;
      t.indices_[dst] = static_cast<Index>(r);
      t.values_[dst] = values_[p];
    }
  }
  return t;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = indptr_[r]; p < indptr_[r + 1]; ++p) {
      d(static_cast<Eigen::Index>(r), indices_[p]) = values_[p];
    }
  }
  return d;
}

std::vector<Triplet> CsrMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t p = indptr_[r]; p < indptr_[r + 1]; ++p) {
      out.push_back({static_cast<Index>(r), indices_[p], values_[p]});
    }
  }
  return out;
}

CsrBuilder::CsrBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  indptr_.reserve(rows + 1);
}

void CsrBuilder::push(Index col, double value) {
  indices_.push_back(col);
  values_.push_back(value);
}

void CsrBuilder::finish_row() {
  const std::size_t n = indices_.size() - row_start_;
  if (n > 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto* idx = indices_.data() + row_start_;
    std::sort(order.begin(), order.end(), [idx](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
    std::vector<Index> si(n);
    std::vector<double> sv(n);
    for (std::size_t k = 0; k < n; ++k) {
      si[k] = indices_[row_start_ + order[k]];
      sv[k] = values_[row_start_ + order[k]];
    }
    std::copy(si.begin(), si.end(), indices_.begin() + static_cast<std::ptrdiff_t>(row_start_));
    std::copy(sv.begin(), sv.end(), values_.begin() + static_cast<std::ptrdiff_t>(row_start_));
  }
  indptr_.push_back(indices_.size());
  row_start_ = indices_.size();
}

void CsrBuilder::append_row(std::span<const Index> indices, std::span<const double> values) {
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  values_.insert(values_.end(), values.begin(), values.end());
  indptr_.push_back(indices_.size());
  row_start_ = indices_.size();
}

CsrMatrix CsrBuilder::build() && {
  while (indptr_.size() < rows_ + 1) indptr_.push_back(indices_.size());
  return CsrMatrix(rows_, cols_, std::move(indptr_), std::move(indices_), std::move(values_));
}

Eigen::MatrixXd multiply(const CsrMatrix& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()), b.cols());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto row = a.row(r);
      for (std::size_t p = 0; p < row.size(); ++p) {
        out.row(static_cast<Eigen::Index>(r)).noalias() += row.values[p] * b.row(row.indices[p]);
      }
    }
  });
  return out;
}

Eigen::MatrixXd multiply_transposed(const CsrMatrix& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.cols()), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t p = 0; p < row.size(); ++p) {
      out.row(row.indices[p]).noalias() += row.values[p] * b.row(static_cast<Eigen::Index>(r));
    }
  }
  return out;
}

}  // namespace recbase
