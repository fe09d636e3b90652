#include "sspnp/model/channel_system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sspnp/errors.hpp"

namespace sspnp::model {

std::vector<double> FixedChargeProfile::interfaces() const {
  std::vector<double> out;
  double x = -1.0;
  for (std::size_t i = 0; i + 1 < lengths.size(); ++i) {
    x += lengths[i];
    out.push_back(x);
  }
  return out;
}

void FixedChargeProfile::validate() const {
  if (lengths.empty()) throw InvalidSystem("fixed charge: at least one segment required");
  if (lengths.size() != plateaus.size()) {
    throw InvalidSystem("fixed charge: segment_lengths and plateau_values differ in length");
  }
  double total = 0.0;
  for (double l : lengths) {
    if (!(l > 0.0)) throw InvalidSystem("fixed charge: segment lengths must be positive");
    total += l;
  }
  if (std::abs(total - 2.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "fixed charge: segment lengths sum to " << total << ", expected 2";
    throw InvalidSystem(msg.str());
  }
  if (!(sigma >= 0.0)) throw InvalidSystem("fixed charge: sigma must be non-negative");
}

double fixed_charge_at(const FixedChargeProfile& profile, double x) {
  if (!(x >= -1.0 && x <= 1.0)) throw OutOfDomain("fixed_charge_at: abscissa outside [-1, 1]");
  if (profile.sigma == 0.0) return 0.0;
  const std::vector<double> cuts = profile.interfaces();
  const auto segment = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
  return profile.sigma * profile.plateaus[segment];
}

std::string NeutralityReport::describe() const {
  if (ok) return "neutral";
  std::ostringstream msg;
  msg.precision(17);
  msg << "neutrality violated:";
  if (left_imbalance != 0.0) msg << " left side sum z_i c_i = " << left_imbalance;
  if (right_imbalance != 0.0) msg << " right side sum z_i c_i = " << right_imbalance;
  return msg.str();
}

NeutralityReport check_neutrality(std::span<const Species> species, double tol) {
  NeutralityReport report;
  for (const Species& s : species) {
    report.left_imbalance += s.valence * s.c_left;
    report.right_imbalance += s.valence * s.c_right;
  }
  report.ok = std::abs(report.left_imbalance) <= tol && std::abs(report.right_imbalance) <= tol;
  return report;
}

std::vector<int> ChannelSystem::valences() const {
  std::vector<int> z;
  z.reserve(species.size());
  for (const Species& s : species) z.push_back(s.valence);
  return z;
}

void ChannelSystem::validate() const {
  if (!(kappa > 0.0)) throw InvalidSystem("kappa must be positive");
  if (species.size() < 2) throw InvalidSystem("at least two ionic species required");
  for (const Species& s : species) {
    if (s.valence == 0) throw InvalidSystem("species valence must be non-zero");
    if (!(s.c_left > 0.0) || !(s.c_right > 0.0)) {
      throw InvalidSystem("boundary concentrations must be positive");
    }
  }
  const NeutralityReport report = check_neutrality(species);
  if (!report.ok) throw NeutralityViolated(report.describe());
  profile.validate();
}

ChannelSystem ChannelSystem::with_sigma(double sigma) const {
  ChannelSystem out = *this;
  out.profile.sigma = sigma;
  return out;
}

ChannelSystem ChannelSystem::with_kappa(double k) const {
  ChannelSystem out = *this;
  out.kappa = k;
  return out;
}

ChannelSystem two_ion_channel(double kappa, double sigma) {
  ChannelSystem sys;
  sys.kappa = kappa;
  sys.species = {{1, 1.0, 0.5}, {-1, 1.0, 0.5}};
  sys.profile.lengths = {0.5, 0.5, 0.5, 0.5};
  sys.profile.plateaus = {1.0, -10.0, 20.0, -60.0};
  sys.profile.sigma = sigma;
  return sys;
}

ChannelSystem five_ion_channel(double kappa, double sigma) {
  ChannelSystem sys;
  sys.kappa = kappa;
  sys.species = {{1, 1.0, 0.5}, {-1, 1.0, 2.0}, {2, 0.5, 1.0}, {-2, 1.0, 0.5}, {1, 1.0, 0.5}};
  sys.profile.lengths = {0.4, 0.6, 0.8, 0.2};
  sys.profile.plateaus = {720.0, -800.0, 960.0, -5600.0};
  sys.profile.sigma = sigma;
  return sys;
}

}  // namespace sspnp::model
