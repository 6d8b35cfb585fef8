#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pamcts/experiment.hpp"

namespace pamcts {

nlohmann::json plot_data(std::span<const CellResult> results) {
    // env labels keep first-appearance order; alphas and budgets are sorted.
    std::vector<std::string> envs;
    for (const auto& c : results) {
        if (std::find(envs.begin(), envs.end(), c.env_label) == envs.end()) envs.push_back(c.env_label);
    }
    nlohmann::json out{{"envs", nlohmann::json::array()}};
    for (const auto& env : envs) {
        std::vector<double> alphas;
        for (const auto& c : results) {
            if (c.env_label == env && std::find(alphas.begin(), alphas.end(), c.alpha) == alphas.end()) {
                alphas.push_back(c.alpha);
            }
        }
        std::sort(alphas.begin(), alphas.end());
        nlohmann::json panels = nlohmann::json::array();
        for (double a : alphas) {
            std::vector<const CellResult*> cells;
            for (const auto& c : results) {
                if (c.env_label == env && c.alpha == a) cells.push_back(&c);
            }
            std::stable_sort(cells.begin(), cells.end(),
                             [](const CellResult* x, const CellResult* y) { return x->budget < y->budget; });
            nlohmann::json points = nlohmann::json::array();
            for (const auto* c : cells) {
                points.push_back({{"budget", c->budget}, {"mean", c->mean}, {"std", c->std_dev}});
            }
            panels.push_back({{"alpha", a}, {"points", std::move(points)}});
        }
        out["envs"].push_back({{"env_label", env}, {"panels", std::move(panels)}});
    }
    return out;
}

namespace {

constexpr double kPanelW = 180.0;
constexpr double kPanelH = 140.0;
constexpr double kMarginL = 60.0;
constexpr double kMarginT = 40.0;
constexpr double kGap = 20.0;

std::string num(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const nlohmann::json& plot) {
    const auto& envs = plot.at("envs");
    std::size_t cols = 1;
    double y_max = 1.0;
    double b_min = 1e300, b_max = -1e300;
    for (const auto& e : envs) {
        cols = std::max<std::size_t>(cols, e.at("panels").size());
        for (const auto& p : e.at("panels")) {
            for (const auto& pt : p.at("points")) {
                const double m = pt.at("mean").get<double>();
                const double s = pt.at("std").get<double>();
                y_max = std::max(y_max, m + s);
                const double b = pt.at("budget").get<double>();
                b_min = std::min(b_min, b);
                b_max = std::max(b_max, b);
            }
        }
    }
    if (b_min > b_max) b_min = b_max = 0.0;
    if (b_max == b_min) {
        b_min -= 1.0;
        b_max += 1.0;
    }
    const std::size_t rows = std::max<std::size_t>(envs.size(), 1);
    const double width = kMarginL + static_cast<double>(cols) * (kPanelW + kGap);
    const double height = kMarginT + static_cast<double>(rows) * (kPanelH + kGap + 20.0);

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
       << num(height) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t r = 0; r < envs.size(); ++r) {
        const auto& e = envs[r];
        const double top = kMarginT + static_cast<double>(r) * (kPanelH + kGap + 20.0);
        os << "<text x=\"4\" y=\"" << num(top + kPanelH / 2) << "\">"
           << escape(e.at("env_label").get<std::string>()) << "</text>\n";
        const auto& panels = e.at("panels");
        for (std::size_t c = 0; c < panels.size(); ++c) {
            const auto& p = panels[c];
            const double left = kMarginL + static_cast<double>(c) * (kPanelW + kGap);
            auto px = [&](double b) { return left + (b - b_min) / (b_max - b_min) * kPanelW; };
            auto py = [&](double v) { return top + kPanelH - std::max(0.0, v) / y_max * kPanelH; };
            os << "<g class=\"panel\">\n";
            os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(kPanelW)
               << "\" height=\"" << num(kPanelH) << "\" fill=\"none\" stroke=\"#999\"/>\n";
            os << "<text x=\"" << num(left + kPanelW / 2) << "\" y=\"" << num(top - 4)
               << "\" text-anchor=\"middle\">alpha=" << p.at("alpha").get<double>() << "</text>\n";
            for (const auto& pt : p.at("points")) {
                const double b = pt.at("budget").get<double>();
                const double m = pt.at("mean").get<double>();
                const double s = pt.at("std").get<double>();
                os << "<line x1=\"" << num(px(b)) << "\" y1=\"" << num(py(m - s)) << "\" x2=\""
                   << num(px(b)) << "\" y2=\"" << num(py(m + s)) << "\" stroke=\"#36c\"/>\n";
                os << "<circle cx=\"" << num(px(b)) << "\" cy=\"" << num(py(m))
                   << "\" r=\"2.5\" fill=\"#36c\"/>\n";
            }
            os << "</g>\n";
        }
    }
    os << "<text x=\"4\" y=\"14\">y: cumulative reward (max " << num(y_max)
       << "), x: iterations per decision</text>\n";
    os << "</svg>\n";
    return os.str();
}

void emit_plot_data(std::span<const CellResult> results, const std::filesystem::path& json_path,
                    const std::optional<std::filesystem::path>& svg_path) {
    const auto data = plot_data(results);
    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + json_path.string() + " for writing");
        out << data.dump(2) << '\n';
    }
    if (svg_path) {
        std::ofstream out(*svg_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + svg_path->string() + " for writing");
        out << render_svg(data);
    }
}

}  // namespace pamcts
