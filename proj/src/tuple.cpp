#include "svfkit/tuple.hpp"

#include "svfkit/linalg.hpp"
#include "svfkit/multilinear.hpp"

namespace svfkit {

MatrixTuple MatrixTuple::from_float(std::vector<MatrixD> matrices, std::vector<std::string> labels) {
  MatrixTuple t;
  t.matrices_ = std::move(matrices);
  t.labels_ = std::move(labels);
  t.validate();
  return t;
}

MatrixTuple MatrixTuple::from_exact(std::vector<MatrixQ> matrices, std::vector<std::string> labels) {
  MatrixTuple t;
  t.matrices_.reserve(matrices.size());
  for (const auto& m : matrices) t.matrices_.push_back(to_double(m));
  t.exact_ = std::move(matrices);
  t.labels_ = std::move(labels);
  t.validate();
  return t;
}

const std::vector<MatrixQ>& MatrixTuple::exact() const {
  if (!exact_) throw InputError("tuple has no exact representation");
  return *exact_;
}

void MatrixTuple::validate() const {
  if (matrices_.empty()) throw InputError("tuple must contain at least one matrix");
  const std::size_t d = matrices_.front().rows();
  if (d == 0) throw InputError("matrices must be nonempty");
  if (!labels_.empty() && labels_.size() != matrices_.size())
    throw InputError("labels must match the number of matrices");
  for (std::size_t i = 0; i < matrices_.size(); ++i) {
    const auto& m = matrices_[i];
    const std::string where = "matrix " + std::to_string(i + 1);
    if (!m.is_square()) throw InputError(where + " is not square");
    if (m.rows() != d) throw InputError(where + " has dimension " + std::to_string(m.rows()) + ", expected " + std::to_string(d));
    if (!is_finite(m)) throw InputError(where + " has non-finite entries");
    if (exact_) {
      if (determinant((*exact_)[i]) == 0) throw DomainError(where + " is singular (det = 0)");
    } else {
      auto alpha = singular_values(m).values;
      if (alpha.back() <= kSingularRatio * alpha.front())
        throw DomainError(where + " is singular to working precision");
    }
  }
}

MatrixTuple MatrixTuple::without(std::size_t index) const {
  if (index >= size()) throw InputError("remove index out of range");
  auto drop = [index](auto v) {
    if (!v.empty()) v.erase(v.begin() + static_cast<std::ptrdiff_t>(index));
    return v;
  };
  if (exact_) return from_exact(drop(*exact_), drop(labels_));
  return from_float(drop(matrices_), drop(labels_));
}

MatrixTuple MatrixTuple::conjugated(const MatrixD& x) const {
  MatrixD xi = inverse(x);
  std::vector<MatrixD> out;
  for (const auto& m : matrices_) out.push_back(xi * m * x);
  return from_float(std::move(out), labels_);
}

MatrixTuple MatrixTuple::conjugated(const MatrixQ& x) const {
  if (!exact_) return conjugated(to_double(x));
  MatrixQ xi = inverse(x);
  std::vector<MatrixQ> out;
  for (const auto& m : *exact_) out.push_back(xi * m * x);
  return from_exact(std::move(out), labels_);
}

double MatrixTuple::max_norm() const {
  double r = 0.0;
  for (const auto& m : matrices_) r = std::max(r, spectral_norm(m));
  return r;
}

}  // namespace svfkit
