#include <fstream>
#include <iomanip>
#include <sstream>

#include "ptrack/eval.hpp"

namespace ptrack {

void write_comparison(const std::map<std::string, std::map<std::string, MetricsReport>>&
                          method_to_scenario,
                      const std::string& csv_path, const std::string& svg_path) {
  // Fixed scenario order mirroring the published comparison table.
  const std::vector<std::string> scenarios = {"no_disturbance", "terrains",
                                              "external_forces",
                                              "physical_property_changes"};
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ConfigError("write_comparison: cannot open " + csv_path);
    out << "method";
    for (const std::string& s : scenarios)
      out << "," << s << "_sr," << s << "_mpjpe_mm," << s << "_mpjve_mm";
    out << "\n";
    for (const auto& [method, per_scenario] : method_to_scenario) {
      out << method;
      for (const std::string& s : scenarios) {
        auto it = per_scenario.find(s);
        if (it == per_scenario.end()) {
          out << ",,,";
        } else {
          out << "," << it->second.sr << "," << it->second.mpjpe_mm << ","
              << it->second.mpjve_mm;
        }
      }
      out << "\n";
    }
  }

  // Grouped SR bar chart.
  const int n_methods = static_cast<int>(method_to_scenario.size());
  const int group_w = 40 * std::max(n_methods, 1) + 30;
  const int width = 80 + group_w * static_cast<int>(scenarios.size());
  const int height = 320;
  const int base_y = 260;
  const double bar_scale = 2.0;  // 100% SR -> 200 px

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<text x=\"10\" y=\"20\" font-size=\"14\">Success rate (%) by scenario</text>\n";
  static const char* colors[] = {"#4878cf", "#ee854a", "#6acc65", "#d65f5f",
                                 "#956cb4", "#8c613c"};
  int mi = 0;
  for (const auto& [method, per_scenario] : method_to_scenario) {
    svg << "<rect x=\"" << 10 + mi * 160 << "\" y=\"30\" width=\"12\" height=\"12\" fill=\""
        << colors[mi % 6] << "\"/>\n";
    svg << "<text x=\"" << 26 + mi * 160 << "\" y=\"41\" font-size=\"11\">" << method
        << "</text>\n";
    ++mi;
  }
  for (size_t si = 0; si < scenarios.size(); ++si) {
    const int gx = 60 + static_cast<int>(si) * group_w;
    svg << "<text x=\"" << gx << "\" y=\"" << base_y + 20 << "\" font-size=\"10\">"
        << scenarios[si] << "</text>\n";
    mi = 0;
    for (const auto& [method, per_scenario] : method_to_scenario) {
      auto it = per_scenario.find(scenarios[si]);
      const double sr = it == per_scenario.end() ? 0.0 : it->second.sr;
      const int h = static_cast<int>(sr * bar_scale);
      svg << "<rect x=\"" << gx + mi * 40 << "\" y=\"" << base_y - h
          << "\" width=\"30\" height=\"" << h << "\" fill=\"" << colors[mi % 6]
          << "\"/>\n";
      svg << "<text x=\"" << gx + mi * 40 << "\" y=\"" << base_y - h - 4
          << "\" font-size=\"9\">" << std::fixed << std::setprecision(1) << sr
          << "</text>\n";
      ++mi;
    }
  }
  svg << "</svg>\n";

  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw ConfigError("write_comparison: cannot open " + svg_path);
  out << svg.str();
}

}  // namespace ptrack
