#include "mfsm/synthbench.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "mfsm/errors.hpp"
#include "mfsm/rng.hpp"

namespace mfsm::synth {

namespace {

using std::numbers::pi;

void check_bounds(const std::vector<Interval>& bounds) {
  if (bounds.empty()) throw InputError("sampling bounds are empty");
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    const auto [lo, hi] = bounds[j];
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw InputError("degenerate bounds on dimension " + std::to_string(j) + ": lo must be < hi");
    }
  }
}

Eigen::MatrixXd apply(const PointFn& f, const AnalyticPair& p, const Eigen::MatrixXd& x) {
  if (x.cols() != p.dim()) {
    throw InputError(p.name + " takes " + std::to_string(p.dim()) + " inputs, got " +
                     std::to_string(x.cols()));
  }
  bool outside = false;
  Eigen::MatrixXd y(x.rows(), p.outputs());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto [lo, hi] = p.bounds[static_cast<std::size_t>(j)];
      if (x(i, j) < lo || x(i, j) > hi) outside = true;
    }
    y.row(i) = f(x.row(i).transpose()).transpose();
  }
  if (outside) std::cerr << "warning: " << p.name << " evaluated outside its bounds\n";
  return y;
}

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

double forrester_hf(double x) {
  const double a = 6.0 * x - 2.0;
  return a * a * std::sin(12.0 * x - 4.0);
}

double forrester_lf(double x) { return 0.5 * forrester_hf(x) + 10.0 * (x - 0.5) - 5.0; }

AnalyticPair forrester() {
  AnalyticPair p;
  p.name = "forrester";
  p.bounds = {{0.0, 1.0}};
  p.input_names = {"x"};
  p.output_names = {"y"};
  p.hf = [](const Eigen::VectorXd& x) { return scalar(forrester_hf(x(0))); };
  p.lf = [](const Eigen::VectorXd& x) { return scalar(forrester_lf(x(0))); };
  return p;
}

AnalyticPair trig4() {
  AnalyticPair p;
  p.name = "trig4";
  p.bounds = std::vector<Interval>(4, {0.0, 1.0});
  p.input_names = {"x0", "x1", "x2", "x3"};
  p.output_names = {"y0", "y1", "y2"};
  p.hf = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(3);
    y(0) = std::sin(pi * x(0)) + 0.5 * x(1) * x(1) + 0.3 * x(3) * std::cos(2.0 * pi * x(2));
    y(1) = x(0) * x(1) + std::sin(2.0 * pi * x(2)) + 0.2 * x(3) * x(3) * x(3);
    y(2) = std::cos(pi * x(0) * x(3)) + x(2) * x(2) - 0.5 * x(1);
    return y;
  };
  const PointFn hf = p.hf;
  p.lf = [hf](const Eigen::VectorXd& x) {
    const Eigen::Vector3d a(0.8, 1.2, 0.6), b(0.3, -0.2, 0.5), c(-0.5, 0.25, 1.0);
    const double s = x.sum();
    Eigen::VectorXd y = hf(x);
    for (int j = 0; j < 3; ++j) y(j) = a(j) * y(j) + b(j) * s + c(j);
    return y;
  };
  return p;
}

AnalyticPair linear() {
  AnalyticPair p;
  p.name = "linear";
  p.bounds = {{0.0, 1.0}};
  p.input_names = {"x"};
  p.output_names = {"y"};
  p.hf = [](const Eigen::VectorXd& x) { return scalar(x(0)); };
  p.lf = [](const Eigen::VectorXd& x) { return scalar(0.5 * x(0) + 0.1); };
  return p;
}

AnalyticPair pair_by_name(const std::string& name) {
  if (name == "forrester") return forrester();
  if (name == "trig4") return trig4();
  if (name == "linear") return linear();
  throw InputError("unknown benchmark pair '" + name + "' (expected forrester, trig4 or linear)");
}

std::vector<Interval> aero_table_bounds() {
  return {{-20.0, 20.0}, {0.0, 2.0}, {0.0, 90.0}, {1.2, 20.0}};
}

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "lhs" || s == "latin-hypercube") return SamplerKind::latin_hypercube;
  if (s == "grid" || s == "uniform-grid") return SamplerKind::uniform_grid;
  if (s == "random" || s == "uniform-random") return SamplerKind::uniform_random;
  throw InputError("unknown sampler '" + s + "' (expected lhs, grid or random)");
}

Eigen::MatrixXd sample(const Sampler& s, const std::vector<Interval>& bounds, std::size_t n) {
  check_bounds(bounds);
  if (n == 0) throw InputError("sample count must be at least 1");
  const auto d = static_cast<Eigen::Index>(bounds.size());
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(rows, d);
  Rng rng(s.seed);

  switch (s.kind) {
    case SamplerKind::latin_hypercube: {
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto [lo, hi] = bounds[static_cast<std::size_t>(j)];
        std::vector<std::size_t> strata(n);
        for (std::size_t i = 0; i < n; ++i) strata[i] = i;
        shuffle(strata, rng);
        for (Eigen::Index i = 0; i < rows; ++i) {
          const double k = static_cast<double>(strata[static_cast<std::size_t>(i)]);
          const double w = (hi - lo) / static_cast<double>(n);
          // Stay inside [lo + k w, lo + (k+1) w) despite rounding.
          const double left = lo + k * w;
          const double v = left + uniform01(rng) * w;
          x(i, j) = std::min(std::max(v, left), std::nextafter(lo + (k + 1.0) * w, left));
          if (x(i, j) > hi) x(i, j) = hi;
        }
      }
      break;
    }
    case SamplerKind::uniform_random: {
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
          const auto [lo, hi] = bounds[static_cast<std::size_t>(j)];
          x(i, j) = lo + uniform01(rng) * (hi - lo);
        }
      }
      break;
    }
    case SamplerKind::uniform_grid: {
      const auto k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d))));
      std::size_t total = 1;
      for (Eigen::Index j = 0; j < d; ++j) total *= k;
      if (total != n || (k < 2 && n > 1)) {
        throw InputError("uniform grid needs n = k^d points, got n=" + std::to_string(n) +
                         " for d=" + std::to_string(d));
      }
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (Eigen::Index j = d; j-- > 0;) {
          const auto [lo, hi] = bounds[static_cast<std::size_t>(j)];
          const std::size_t idx = rem % k;
          rem /= k;
          x(static_cast<Eigen::Index>(i), j) =
              k == 1 ? 0.5 * (lo + hi)
                     : lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(k - 1);
        }
      }
      break;
    }
  }
  return x;
}

Eigen::MatrixXd truth_evaluate(const AnalyticPair& p, const Eigen::MatrixXd& x) {
  return apply(p.hf, p, x);
}

Eigen::MatrixXd lf_evaluate(const AnalyticPair& p, const Eigen::MatrixXd& x) {
  return apply(p.lf, p, x);
}

data::FidelityDataset make_dataset(const AnalyticPair& p, const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& y, data::Fidelity fidelity) {
  const auto to_tensor = [](const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
    std::vector<double> v(static_cast<std::size_t>(m.size()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) v[k++] = m(i, j);
    }
    return data::DataTensor(static_cast<std::size_t>(m.rows()), names, {"0"}, std::move(v));
  };
  return data::FidelityDataset(fidelity, to_tensor(x, p.input_names), to_tensor(y, p.output_names),
                               "synthetic " + p.name + " " + data::to_string(fidelity));
}

std::pair<data::FidelityDataset, data::FidelityDataset> generate_pair_dataset(
    const AnalyticPair& p, std::size_t n_lf, std::size_t n_hf, const Sampler& s) {
  if (n_lf < n_hf) {
    std::cerr << "warning: " << n_lf << " LF samples is fewer than " << n_hf << " HF samples\n";
  }
  const Eigen::MatrixXd x_lf = sample(s, p.bounds, n_lf);
  const Eigen::MatrixXd x_hf = sample(Sampler{s.kind, s.seed + 1}, p.bounds, n_hf);
  return {make_dataset(p, x_lf, lf_evaluate(p, x_lf), data::Fidelity::low),
          make_dataset(p, x_hf, truth_evaluate(p, x_hf), data::Fidelity::high)};
}

}  // namespace mfsm::synth
