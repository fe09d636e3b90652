#include "sspnp/cli/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sspnp/model/ode.hpp"

namespace sspnp::cli {

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

bool is_jump_target(const continuation::Branch& branch, const continuation::CurvePoint& p) {
  return std::any_of(branch.jump_events.begin(), branch.jump_events.end(),
                     [&](const continuation::JumpEvent& j) { return j.parameter == p.parameter; });
}

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

void write_curve_csv(std::ostream& out, const continuation::Branch& branch) {
  out << "index,swept_param_name,swept_param_value,V,I,c_B,newton_iters,mesh_size,jump_flag\n";
  for (std::size_t k = 0; k < branch.points.size(); ++k) {
    const auto& p = branch.points[k];
    out << k << ',' << branch.parameter_name << ',' << format_number(p.parameter) << ',' << format_number(p.V) << ','
        << format_number(p.I) << ',' << (p.c_b ? format_number(*p.c_b) : "") << ',' << p.step_meta.newton_iterations
        << ',' << p.solution->mesh.size() << ',' << (is_jump_target(branch, p) ? 1 : 0) << '\n';
  }
}

void write_profile_csv(std::ostream& out, const model::ChannelSystem& system, const continuation::Solution& solution) {
  const std::size_t m = system.species_count();
  out << "x,phi,mu";
  for (std::size_t i = 1; i <= m; ++i) out << ",c_" << i;
  for (std::size_t i = 1; i <= m; ++i) out << ",J_" << i;
  out << '\n';
  for (std::size_t k = 0; k < solution.mesh.size(); ++k) {
    const auto y = solution.node(k);
    out << format_number(solution.mesh[k]) << ',' << format_number(y[model::state::kPotential]) << ','
        << format_number(y[model::state::kField]);
    for (std::size_t i = 0; i < m; ++i) out << ',' << format_number(y[model::state::concentration(i)]);
    for (std::size_t i = 0; i < m; ++i) out << ',' << format_number(y[model::state::flux(i)]);
    out << '\n';
  }
}

void write_folds_csv(std::ostream& out, const std::vector<turning::TurningPoint>& folds) {
  out << "V_star,I_star,seed_index,residual\n";
  for (const auto& f : folds) {
    out << format_number(f.V_star) << ',' << format_number(f.I_star) << ',' << f.seed_origin << ','
        << format_number(f.residual) << '\n';
  }
}

void write_multiplicity_csv(std::ostream& out, const turning::MultiplicityMap& map) {
  out << "V_low,V_high,count\n";
  for (const auto& i : map.intervals) {
    out << format_number(i.v_low) << ',' << format_number(i.v_high) << ',' << i.count << '\n';
  }
}

void write_phase_csv(std::ostream& out, const std::vector<continuation::PhaseCell>& cells) {
  out << "sigma,kappa,shape_class,turning_count\n";
  for (const auto& c : cells) {
    out << format_number(c.sigma) << ',' << format_number(c.kappa) << ',';
    if (c.shape) {
      out << c.shape->name() << ',' << c.shape->turning_count;
    } else {
      out << "failed,";
    }
    out << '\n';
  }
}

void write_svg(std::ostream& out, const Plot& plot) {
  constexpr double width = 640, height = 480, left = 70, right = 20, top = 40, bottom = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  const auto extend = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& s : plot.series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) extend(s.x[k], s.y[k]);
  }
  for (const auto& [x, y] : plot.markers) extend(x, y);
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.03 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const double pw = width - left - right, ph = height - top - bottom;
  const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
  char buf[160];

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  out << buf;
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">", px(xv), top + ph + 18);
    out << buf << short_number(xv) << "</text>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">", left - 6, py(yv) + 4);
    out << buf << short_number(yv) << "</text>\n";
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">", left + pw / 2, height - 15);
  out << buf << escape(plot.x_label) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"15\" y=\"%.2f\" text-anchor=\"middle\" transform=\"rotate(-90 15 %.2f)\">", top + ph / 2,
                top + ph / 2);
  out << buf << escape(plot.y_label) << "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">", width / 2);
  out << buf << escape(plot.title) << "</text>\n";

  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const auto& series = plot.series[s];
    const char* color = kColors[s % kColors.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < std::min(series.x.size(), series.y.size()); ++k) {
      if (!std::isfinite(series.x[k]) || !std::isfinite(series.y[k])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(series.x[k]), py(series.y[k]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" fill=\"%s\">", left + 10, top + 16 + 16.0 * s, color);
    out << buf << escape(series.label) << "</text>\n";
  }
  for (const auto& [x, y] : plot.markers) {
    const double cx = px(x), cy = py(y);
    out << "<polygon fill=\"red\" points=\"";
    for (int k = 0; k < 10; ++k) {
      const double r = k % 2 == 0 ? 7.0 : 3.0;
      const double a = M_PI / 2 + k * M_PI / 5;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", cx + r * std::cos(a), cy - r * std::sin(a));
      out << buf;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace sspnp::cli
