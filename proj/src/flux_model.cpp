#include "netlwr/flux_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "netlwr/errors.hpp"

namespace netlwr {

namespace {

constexpr double kBisectionTol = 1e-12;

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

FluxModel FluxModel::quadratic() { return FluxModel{}; }

FluxModel FluxModel::tabulated(std::vector<Sample> samples, double lipschitz_bound) {
  if (samples.size() < 3) {
    throw DomainError("flux table needs at least 3 samples");
  }
  if (samples.front().first != 0.0 || samples.front().second != 0.0 ||
      samples.back().first != 1.0 || samples.back().second != 0.0) {
    throw DomainError("flux table must start at (0, 0) and end at (1, 0)");
  }
  double max_slope = 0.0;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const auto [r0, f0] = samples[k - 1];
    const auto [r1, f1] = samples[k];
    if (!(r1 > r0)) {
      throw DomainError("flux table densities must be strictly increasing (sample " +
                        std::to_string(k) + ")");
    }
    if (f1 < 0.0) {
      throw DomainError("flux table has a negative flux at sample " + std::to_string(k));
    }
    const double slope = (f1 - f0) / (r1 - r0);
    if (slope == 0.0) {
      throw DomainError("flux table has a flat segment at sample " + std::to_string(k) +
                        "; f must be strictly monotone on each branch");
    }
    if (slope > prev_slope * (1.0 + 1e-12) + 1e-12) {
      throw DomainError("flux table is not concave at sample " + std::to_string(k - 1));
    }
    prev_slope = slope;
    max_slope = std::max(max_slope, std::abs(slope));
  }
  if (!(lipschitz_bound >= max_slope)) {
    throw DomainError("lipschitz bound " + describe(lipschitz_bound) +
                      " is below the steepest table slope " + describe(max_slope));
  }

  FluxModel model;
  model.kind_ = Kind::Tabulated;
  model.samples_ = std::move(samples);
  model.lipschitz_ = lipschitz_bound;

  // Ternary search for the maximizer, then snap to the table node it converged to.
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (model.table_flux(m1) < model.table_flux(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  const double guess = 0.5 * (lo + hi);
  const auto nearest = std::min_element(
      model.samples_.begin(), model.samples_.end(), [guess](const Sample& a, const Sample& b) {
        return std::abs(a.first - guess) < std::abs(b.first - guess);
      });
  model.rho_cr_ = std::abs(nearest->first - guess) < 1e-9 ? nearest->first : guess;
  model.f_max_ = model.table_flux(model.rho_cr_);
  if (model.rho_cr_ <= 0.0 || model.rho_cr_ >= 1.0) {
    throw DomainError("flux table maximizer must lie strictly inside (0, 1)");
  }
  return model;
}

Density FluxModel::checked_density(Density rho) const {
  if (!(rho >= -kRangeSlack && rho <= 1.0 + kRangeSlack)) {
    throw DomainError("density " + describe(rho) + " outside [0, 1]");
  }
  return std::clamp(rho, 0.0, 1.0);
}

Flux FluxModel::table_flux(Density rho) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), rho,
                                   [](double r, const Sample& s) { return r < s.first; });
  if (it == samples_.begin()) return samples_.front().second;
  if (it == samples_.end()) return samples_.back().second;
  const auto& [r0, f0] = *(it - 1);
  const auto& [r1, f1] = *it;
  return f0 + (f1 - f0) * (rho - r0) / (r1 - r0);
}

Flux FluxModel::flux(Density rho) const {
  rho = checked_density(rho);
  if (kind_ == Kind::Quadratic) {
    // Vertex form near the top: rho - 0.5 is exact there, so a trace built by
    // inverse_flux reproduces its flux to the last bit.
    if (rho >= 0.25 && rho <= 0.75) {
      const double d = rho - 0.5;
      return 0.25 - d * d;
    }
    return rho * (1.0 - rho);
  }
  return table_flux(rho);
}

double FluxModel::speed_bound(Density rho) const {
  rho = checked_density(rho);
  if (kind_ == Kind::Quadratic) return std::abs(1.0 - 2.0 * rho);
  double best = 0.0;
  for (std::size_t k = 1; k < samples_.size(); ++k) {
    const auto& [r0, f0] = samples_[k - 1];
    const auto& [r1, f1] = samples_[k];
    if (rho >= r0 && rho <= r1) {
      best = std::max(best, std::abs((f1 - f0) / (r1 - r0)));
    }
  }
  return best;
}

Density FluxModel::tau(Density rho) const {
  rho = checked_density(rho);
  if (kind_ == Kind::Quadratic) return 1.0 - rho;
  if (rho == rho_cr_) return rho_cr_;
  const Branch other = rho < rho_cr_ ? Branch::Congested : Branch::Free;
  return inverse_flux(flux(rho), other);
}

Flux FluxModel::demand(Density rho) const {
  rho = checked_density(rho);
  return rho <= rho_cr_ ? flux(rho) : f_max_;
}

Flux FluxModel::supply(Density rho) const {
  rho = checked_density(rho);
  return rho <= rho_cr_ ? f_max_ : flux(rho);
}

Density FluxModel::inverse_flux(Flux gamma, Branch branch) const {
  if (std::isnan(gamma) || gamma < -kRangeSlack) {
    throw DomainError("flux " + describe(gamma) + " is negative");
  }
  if (gamma > f_max_ + kRangeSlack) {
    throw InfeasibleFluxError("flux " + describe(gamma) + " exceeds f_max " + describe(f_max_));
  }
  gamma = std::clamp(gamma, 0.0, f_max_);

  if (kind_ == Kind::Quadratic) {
    if (gamma >= 0.1875) {
      const double d = std::sqrt(0.25 - gamma);
      return branch == Branch::Free ? 0.5 - d : 0.5 + d;
    }
    const double s = std::sqrt(std::max(0.0, 1.0 - 4.0 * gamma));
    // 2 gamma / (1 + s) is the cancellation-free form of (1 - s) / 2.
    return branch == Branch::Free ? 2.0 * gamma / (1.0 + s) : 0.5 * (1.0 + s);
  }

  // f is increasing on [0, rho_cr] and decreasing on [rho_cr, 1].
  double lo = branch == Branch::Free ? 0.0 : rho_cr_;
  double hi = branch == Branch::Free ? rho_cr_ : 1.0;
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    const bool below = table_flux(mid) < gamma;
    if ((branch == Branch::Free) == below) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace netlwr
