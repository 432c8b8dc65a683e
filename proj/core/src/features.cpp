#include "cloud3d/features.hpp"

#include <algorithm>
#include <cmath>

#include "cloud3d/error.hpp"

namespace cloud3d {
namespace {

constexpr double kDryAirGasConstant = 287.04;  // J kg-1 K-1

void append(std::vector<double>& out, std::span<const double> values) {
  out.insert(out.end(), values.begin(), values.end());
}

}  // namespace

FeatureSchema::FeatureSchema(Component component, std::size_t n_fl_window, bool with_humidity,
                             bool with_thickness)
    : component_(component), n_fl_(n_fl_window), with_q_(with_humidity), with_dz_(with_thickness) {
  if (n_fl_window == 0) {
    throw InvalidInput("schema: window must contain at least one full level");
  }
  const std::size_t fl = n_fl_;
  const std::size_t hl = n_fl_ + 1;

  inputs_ = {{"f_c", fl}, {"tau_c", fl}};
  if (component == Component::Longwave) inputs_.push_back({"T", fl});
  if (with_q_) inputs_.push_back({"q", fl});
  if (with_dz_) inputs_.push_back({"dz", fl});
  if (component == Component::Longwave) {
    inputs_.push_back({"T_s", 1});
  } else {
    inputs_.push_back({"alpha", 1});
    inputs_.push_back({"mu0", 1});
  }

  outputs_ = {{"scalar", hl}};
  if (component == Component::Shortwave) outputs_.push_back({"direct_down", hl});
  outputs_.push_back({"heat", fl});
}

std::size_t FeatureSchema::input_len() const noexcept {
  std::size_t n = 0;
  for (const auto& b : inputs_) n += b.length;
  return n;
}

std::size_t FeatureSchema::output_len() const noexcept {
  std::size_t n = 0;
  for (const auto& b : outputs_) n += b.length;
  return n;
}

std::vector<double> build_input_vector(const AtmosphericProfile& profile,
                                       std::span<const double> tau_c,
                                       const FeatureSchema& schema, const PhysConsts& consts) {
  const VerticalGrid& grid = profile.grid;
  if (tau_c.size() != grid.n_fl()) {
    throw InvalidInput("input vector: tau_c length " + std::to_string(tau_c.size()) +
                       " != full levels " + std::to_string(grid.n_fl()));
  }
  const Window w = window_of(grid, consts);
  if (w.n_fl != schema.n_fl_window()) {
    throw InvalidInput("input vector: profile window has " + std::to_string(w.n_fl) +
                       " levels, schema expects " + std::to_string(schema.n_fl_window()));
  }
  const auto win = [&](std::span<const double> full) {
    return full.subspan(w.first_fl, w.n_fl);
  };

  std::vector<double> x;
  x.reserve(schema.input_len());
  for (const auto& block : schema.inputs()) {
    if (block.name == "f_c") {
      append(x, win(profile.cloud_fraction));
    } else if (block.name == "tau_c") {
      append(x, win(tau_c));
    } else if (block.name == "T") {
      append(x, win(profile.temperature));
    } else if (block.name == "q") {
      if (!profile.humidity) {
        throw InvalidInput("input vector: schema requires humidity but profile has none");
      }
      append(x, win(*profile.humidity));
    } else if (block.name == "dz") {
      for (std::size_t i = w.first_fl; i < grid.n_fl(); ++i) {
        x.push_back(kDryAirGasConstant * profile.temperature[i] * grid.dp(i) /
                    (consts.g * grid.p_fl(i)));
      }
    } else if (block.name == "T_s") {
      x.push_back(profile.skin_temperature);
    } else if (block.name == "alpha") {
      x.push_back(profile.albedo);
    } else if (block.name == "mu0") {
      x.push_back(profile.mu0);
    }
  }
  if (x.size() != schema.input_len()) {
    throw InvalidInput("input vector: assembled length " + std::to_string(x.size()) +
                       " != schema input length " + std::to_string(schema.input_len()));
  }
  return x;
}

std::vector<double> build_target_vector(const EffectTargets& effects, const FeatureSchema& schema) {
  if (effects.component != schema.component()) {
    throw InvalidInput("target vector: component mismatch");
  }
  effects.validate(schema.n_fl_window());
  std::vector<double> y;
  y.reserve(schema.output_len());
  for (const auto& block : schema.outputs()) {
    if (block.name == "scalar") {
      append(y, effects.scalar);
    } else if (block.name == "direct_down") {
      if (!effects.direct_down) {
        throw InvalidInput("target vector: shortwave targets need direct_down");
      }
      append(y, *effects.direct_down);
    } else if (block.name == "heat") {
      append(y, effects.heat);
    }
  }
  return y;
}

EffectTargets split_output_vector(std::span<const double> values, const FeatureSchema& schema,
                                  double alpha) {
  if (values.size() != schema.output_len()) {
    throw InvalidInput("output vector: length " + std::to_string(values.size()) +
                       " != schema output length " + std::to_string(schema.output_len()));
  }
  EffectTargets t;
  t.component = schema.component();
  t.alpha = alpha;
  std::size_t pos = 0;
  for (const auto& block : schema.outputs()) {
    Profile1D part(values.begin() + static_cast<std::ptrdiff_t>(pos),
                   values.begin() + static_cast<std::ptrdiff_t>(pos + block.length));
    pos += block.length;
    if (block.name == "scalar") {
      t.scalar = std::move(part);
    } else if (block.name == "direct_down") {
      t.direct_down = std::move(part);
    } else if (block.name == "heat") {
      t.heat = std::move(part);
    }
  }
  return t;
}

Normalization Normalization::fit(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw InvalidInput("normalization: need at least two samples, got " +
                       std::to_string(samples.rows()));
  }
  const double n = static_cast<double>(samples.rows());
  Normalization norm;
  norm.mean = samples.colwise().mean().transpose();
  norm.scale.resize(samples.cols());
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    const double var = (samples.col(c).array() - norm.mean(c)).square().sum() / n;
    // Columns constant over the fit set keep unit scale; a tiny divisor would
    // blow up any other value seen later.
    const double sd = std::sqrt(var);
    norm.scale(c) = sd < kScaleFloor ? 1.0 : sd;
  }
  return norm;
}

Normalization Normalization::identity(std::size_t n) {
  const auto len = static_cast<Eigen::Index>(n);
  return {Vector::Zero(len), Vector::Ones(len)};
}

void Normalization::apply_inplace(Matrix& m) const {
  if (static_cast<std::size_t>(m.cols()) != size()) {
    throw InvalidInput("normalization: width " + std::to_string(m.cols()) + " != " +
                       std::to_string(size()));
  }
  m.rowwise() -= mean.transpose();
  m.array().rowwise() /= scale.transpose().array();
}

void Normalization::invert_inplace(Matrix& m) const {
  if (static_cast<std::size_t>(m.cols()) != size()) {
    throw InvalidInput("normalization: width " + std::to_string(m.cols()) + " != " +
                       std::to_string(size()));
  }
  m.array().rowwise() *= scale.transpose().array();
  m.rowwise() += mean.transpose();
}

Matrix Normalization::apply(const Matrix& m) const {
  Matrix out = m;
  apply_inplace(out);
  return out;
}

Matrix Normalization::invert(const Matrix& m) const {
  Matrix out = m;
  invert_inplace(out);
  return out;
}

}  // namespace cloud3d
