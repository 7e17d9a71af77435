#pragma once

#include "svfkit/matrix.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svfkit {

enum class Backend { Exact, Float };

/// N invertible d x d matrices. Exact tuples keep their rational entries next
/// to a double copy; every numeric routine reads the doubles, structural
/// routines prefer the rationals when present.
class MatrixTuple {
 public:
  MatrixTuple() = default;

  static MatrixTuple from_float(std::vector<MatrixD> matrices, std::vector<std::string> labels = {});
  static MatrixTuple from_exact(std::vector<MatrixQ> matrices, std::vector<std::string> labels = {});

  std::size_t dim() const { return matrices_.empty() ? 0 : matrices_.front().rows(); }
  std::size_t size() const { return matrices_.size(); }
  Backend backend() const { return exact_ ? Backend::Exact : Backend::Float; }
  bool is_exact() const { return exact_.has_value(); }

  const std::vector<MatrixD>& matrices() const { return matrices_; }
  const MatrixD& operator[](std::size_t i) const { return matrices_[i]; }
  const std::vector<MatrixQ>& exact() const;
  const std::vector<std::string>& labels() const { return labels_; }

  /// The tuple with matrix `index` removed.
  MatrixTuple without(std::size_t index) const;
  /// X^{-1} A_i X for every i (exact when both the tuple and X are exact).
  MatrixTuple conjugated(const MatrixD& x) const;
  MatrixTuple conjugated(const MatrixQ& x) const;

  /// max_i alpha_1(A_i).
  double max_norm() const;
  bool is_contractive() const { return max_norm() < 1.0; }

 private:
  void validate() const;

  std::vector<MatrixD> matrices_;
  std::optional<std::vector<MatrixQ>> exact_;
  std::vector<std::string> labels_;
};

}  // namespace svfkit
