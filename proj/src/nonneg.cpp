#include "svfkit/nonneg.hpp"

#include <functional>
#include <numeric>

namespace svfkit {

std::vector<std::vector<std::size_t>> strongly_connected_components(const MatrixD& m) {
  const std::size_t n = m.rows();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  std::function<void(std::size_t)> connect = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (!(m(v, w) > 0.0)) continue;
      if (index[w] == kUnvisited) {
        connect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> component;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component.push_back(w);
      } while (w != v);
      std::sort(component.begin(), component.end());
      components.push_back(std::move(component));
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] == kUnvisited) connect(v);
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

MatrixD restrict(const MatrixD& m, const std::vector<std::size_t>& indices) {
  MatrixD out(indices.size(), indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (std::size_t j = 0; j < indices.size(); ++j) out(i, j) = m(indices[i], indices[j]);
  return out;
}

void require_nonnegative(const MatrixD& m, const char* what) {
  for (double x : m.data())
    if (!(x >= 0.0)) throw InputError(std::string(what) + ": entries must be nonnegative");
}

namespace {

// Power iteration for x -> x B with B = M/scale + I (rows when transpose).
std::vector<double> power_vector(const MatrixD& b, bool left, double rel_tol, double& value,
                                 std::size_t& iterations) {
  const std::size_t n = b.rows();
  std::vector<double> x(n, 1.0), y(n);
  constexpr std::size_t kMaxIterations = 1000000;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t stalled = 0;
  for (iterations = 1; iterations <= kMaxIterations; ++iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += (left ? b(j, i) : b(i, j)) * x[j];
      y[i] = s;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      top = std::max(top, y[i]);
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / top;
    double gap = hi - lo;
    if (gap <= rel_tol * hi) {
      value = 0.5 * (lo + hi);
      return x;
    }
    if (gap < best_gap * (1 - 1e-3)) {
      best_gap = gap;
      stalled = 0;
    } else if (++stalled > 2000) {
      if (gap <= 1e-10 * hi) {
        value = 0.5 * (lo + hi);
        return x;
      }
      break;
    }
  }
  throw NumericError("Perron iteration did not converge (Collatz-Wielandt gap " + std::to_string(best_gap) + ")");
}

}  // namespace

PerronData perron(const MatrixD& m, double rel_tol) {
  if (!m.is_square() || m.rows() == 0) throw InputError("perron: matrix must be square and nonempty");
  require_nonnegative(m, "perron");
  const std::size_t n = m.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += m(i, j);
    scale = std::max(scale, row);
  }
  if (scale == 0.0) throw DomainError("perron: zero matrix");
  PerronData out;
  if (n == 1) {
    out.value = m(0, 0);
    out.left = {1.0};
    out.right = {1.0};
    return out;
  }
  MatrixD b = m;
  b *= 1.0 / scale;
  for (std::size_t i = 0; i < n; ++i) b(i, i) += 1.0;
  double vr = 0.0, vl = 0.0;
  std::size_t it_r = 0, it_l = 0;
  out.right = power_vector(b, false, rel_tol, vr, it_r);
  out.left = power_vector(b, true, rel_tol, vl, it_l);
  for (double x : out.right)
    if (!(x > 0.0)) throw DomainError("perron: matrix is reducible (right vector not positive)");
  out.value = (0.5 * (vr + vl) - 1.0) * scale;
  out.iterations = it_r + it_l;
  double top = *std::max_element(out.right.begin(), out.right.end());
  for (double& x : out.right) x /= top;
  double uv = 0.0;
  for (std::size_t i = 0; i < n; ++i) uv += out.left[i] * out.right[i];
  for (double& x : out.left) x /= uv;
  return out;
}

double spectral_radius_nonneg(const MatrixD& m) {
  require_nonnegative(m, "spectral_radius_nonneg");
  double best = 0.0;
  for (const auto& c : strongly_connected_components(m)) {
    MatrixD sub = restrict(m, c);
    if (c.size() == 1 && sub(0, 0) == 0.0) continue;
    best = std::max(best, perron(sub).value);
  }
  return best;
}

int cyclicity(const MatrixD& m) {
  const std::size_t n = m.rows();
  std::vector<long> level(n, -1);
  std::vector<std::size_t> queue{0};
  level[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t v = queue[head];
    for (std::size_t w = 0; w < n; ++w)
      if (m(v, w) > 0.0 && level[w] < 0) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      }
  }
  long g = 0;
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t w = 0; w < n; ++w)
      if (m(v, w) > 0.0 && level[v] >= 0 && level[w] >= 0) g = std::gcd(g, std::labs(level[v] + 1 - level[w]));
  return g == 0 ? 1 : static_cast<int>(g);
}

}  // namespace svfkit
