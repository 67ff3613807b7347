#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfsm/tensor.hpp"

namespace mfsm::synth {

using Interval = std::pair<double, double>;
using PointFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Analytic low/high fidelity function pair on a box.
struct AnalyticPair {
  std::string name;
  std::vector<Interval> bounds;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  PointFn hf;
  PointFn lf;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(bounds.size()); }
  Eigen::Index outputs() const { return static_cast<Eigen::Index>(output_names.size()); }
};

/// f_hf(x) = (6x-2)^2 sin(12x-4), f_lf(x) = 0.5 f_hf(x) + 10(x-0.5) - 5 on [0, 1].
double forrester_hf(double x);
double forrester_lf(double x);
AnalyticPair forrester();

/// d=4, q=3 on [0,1]^4:
///   y0 = sin(pi x0) + 0.5 x1^2 + 0.3 x3 cos(2 pi x2)
///   y1 = x0 x1 + sin(2 pi x2) + 0.2 x3^3
///   y2 = cos(pi x0 x3) + x2^2 - 0.5 x1
/// LF_j = a_j y_j + b_j (x0 + x1 + x2 + x3) + c_j with
/// a = (0.8, 1.2, 0.6), b = (0.3, -0.2, 0.5), c = (-0.5, 0.25, 1.0).
AnalyticPair trig4();

/// y = x on [0, 1]; LF is 0.5 x + 0.1.
AnalyticPair linear();

/// "forrester", "trig4" or "linear".
AnalyticPair pair_by_name(const std::string& name);

/// Operating-condition box of the aerodynamic table inputs:
/// alpha [-20, 20] deg, beta [0, 2] deg, altitude [0, 90] km, Mach [1.2, 20].
std::vector<Interval> aero_table_bounds();

enum class SamplerKind { latin_hypercube, uniform_grid, uniform_random };
SamplerKind sampler_from_string(const std::string& s);

struct Sampler {
  SamplerKind kind = SamplerKind::latin_hypercube;
  std::uint64_t seed = 0;
};

/// n x d samples inside `bounds`. Latin hypercube puts exactly one sample in
/// each of the n equal strata of every axis. The uniform grid needs n = k^d
/// and includes both endpoints of each axis (k >= 2).
Eigen::MatrixXd sample(const Sampler& s, const std::vector<Interval>& bounds, std::size_t n);

/// HF values at the rows of x. Points outside the bounds are evaluated anyway
/// with a warning on stderr.
Eigen::MatrixXd truth_evaluate(const AnalyticPair& p, const Eigen::MatrixXd& x);
Eigen::MatrixXd lf_evaluate(const AnalyticPair& p, const Eigen::MatrixXd& x);

/// Wraps inputs and outputs as (n, d, 1) and (n, q, 1) tensors.
data::FidelityDataset make_dataset(const AnalyticPair& p, const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& y, data::Fidelity fidelity);

/// Independent LF and HF designs: the LF design uses the sampler seed, the HF
/// design seed + 1.
std::pair<data::FidelityDataset, data::FidelityDataset> generate_pair_dataset(
    const AnalyticPair& p, std::size_t n_lf, std::size_t n_hf, const Sampler& s);

}  // namespace mfsm::synth
