#include "ebcrl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ebcrl/errors.hpp"
#include "ebcrl/metrics.hpp"

namespace ebcrl {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 70.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

const char* color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string esc(const std::string& s) {
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

struct Frame {
  double y_lo = 0.0;
  double y_hi = 1.0;
  double plot_w() const { return kWidth - kLeft - kRight; }
  double plot_h() const { return kHeight - kTop - kBottom; }
  double y(double v) const { return kTop + plot_h() * (1.0 - (v - y_lo) / (y_hi - y_lo)); }
};

Frame make_frame(double max_value) {
  Frame f;
  f.y_hi = (std::isfinite(max_value) && max_value > 0.0) ? max_value * 1.1 : 1.0;
  return f;
}

std::string open_svg(const std::string& title, const std::string& y_label, const Frame& f) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                  "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + esc(title) + "</text>\n";
  s += "<text transform=\"translate(18," + num(kTop + f.plot_h() / 2) + ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" +
       esc(y_label) + "</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = f.y_lo + (f.y_hi - f.y_lo) * t / 5.0;
    const double y = f.y(v);
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" + num(y) +
         "\" stroke=\"#e0e0e0\"/>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\" font-size=\"10\">" +
         tick_label(v) + "</text>\n";
  }
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
       num(kTop + f.plot_h()) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + f.plot_h()) + "\" x2=\"" + num(kWidth - kRight) +
       "\" y2=\"" + num(kTop + f.plot_h()) + "\" stroke=\"black\"/>\n";
  return s;
}

std::string legend(const std::vector<std::string>& labels) {
  std::string s;
  double x = kLeft;
  const double y = kHeight - 14;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"10\" height=\"10\" fill=\"" + color(i) + "\"/>\n";
    s += "<text x=\"" + num(x + 14) + "\" y=\"" + num(y) + "\" font-size=\"11\">" + esc(labels[i]) + "</text>\n";
    x += 24.0 + 7.0 * static_cast<double>(labels[i].size());
  }
  return s;
}

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

}  // namespace

std::string svg_box_chart(const std::string& title, const std::string& y_label, const std::vector<BoxSeries>& series) {
  if (series.empty()) throw ConfigError("box chart needs at least one series");
  double max_v = 0.0;
  for (const auto& s : series)
    for (double v : finite_only(s.values)) max_v = std::max(max_v, v);
  const Frame f = make_frame(max_v);
  std::string out = open_svg(title, y_label, f);
  const double slot = f.plot_w() / static_cast<double>(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(30.0, slot * 0.3);
    out += "<text x=\"" + num(cx) + "\" y=\"" + num(kTop + f.plot_h() + 16) + "\" text-anchor=\"middle\" font-size=\"11\">" +
           esc(series[i].label) + "</text>\n";
    const auto vals = finite_only(series[i].values);
    if (vals.empty()) continue;
    const double q1 = quantile(vals, 0.25);
    const double q3 = quantile(vals, 0.75);
    const double med = quantile(vals, 0.5);
    const double lo = *std::min_element(vals.begin(), vals.end());
    const double hi = *std::max_element(vals.begin(), vals.end());
    out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.y(lo)) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(f.y(hi)) +
           "\" stroke=\"" + color(i) + "\"/>\n";
    out += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(f.y(q3)) + "\" width=\"" + num(2 * half) + "\" height=\"" +
           num(std::max(0.0, f.y(q1) - f.y(q3))) + "\" fill=\"" + color(i) + "\" fill-opacity=\"0.3\" stroke=\"" +
           color(i) + "\"/>\n";
    out += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(f.y(med)) + "\" x2=\"" + num(cx + half) + "\" y2=\"" +
           num(f.y(med)) + "\" stroke=\"" + color(i) + "\" stroke-width=\"2\"/>\n";
    for (double v : vals)
      out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(f.y(v)) + "\" r=\"2.5\" fill=\"" + color(i) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string svg_grouped_bars(const std::string& title, const std::string& y_label,
                             const std::vector<std::string>& groups, const std::vector<std::string>& series,
                             const std::map<std::pair<std::string, std::string>, BarCell>& cells) {
  if (groups.empty() || series.empty()) throw ConfigError("bar chart needs at least one group and one series");
  double max_v = 0.0;
  for (const auto& [k, c] : cells)
    for (double v : {c.median, c.q3})
      if (std::isfinite(v)) max_v = std::max(max_v, v);
  const Frame f = make_frame(max_v);
  std::string out = open_svg(title, y_label, f);
  const double slot = f.plot_w() / static_cast<double>(groups.size());
  const double bar = slot * 0.8 / static_cast<double>(series.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double x0 = kLeft + slot * static_cast<double>(g) + slot * 0.1;
    out += "<text x=\"" + num(kLeft + slot * (static_cast<double>(g) + 0.5)) + "\" y=\"" +
           num(kTop + f.plot_h() + 16) + "\" text-anchor=\"middle\" font-size=\"11\">" + esc(groups[g]) + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const auto it = cells.find({groups[g], series[s]});
      if (it == cells.end() || !std::isfinite(it->second.median)) continue;
      const auto& c = it->second;
      const double x = x0 + bar * static_cast<double>(s);
      out += "<rect x=\"" + num(x) + "\" y=\"" + num(f.y(c.median)) + "\" width=\"" + num(bar * 0.9) + "\" height=\"" +
             num(std::max(0.0, f.y(0.0) - f.y(c.median))) + "\" fill=\"" + color(s) + "\"/>\n";
      const double cx = x + bar * 0.45;
      out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.y(c.q1)) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(f.y(c.q3)) +
             "\" stroke=\"black\"/>\n";
    }
  }
  out += legend(series);
  out += "</svg>\n";
  return out;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series) {
  if (series.empty()) throw ConfigError("line chart needs at least one series");
  double max_v = 0.0;
  double x_lo = HUGE_VAL;
  double x_hi = -HUGE_VAL;
  for (const auto& s : series) {
    for (double v : s.q3)
      if (std::isfinite(v)) max_v = std::max(max_v, v);
    for (double v : s.median)
      if (std::isfinite(v)) max_v = std::max(max_v, v);
    for (double x : s.x) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
    }
  }
  if (!(x_lo < x_hi)) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  const Frame f = make_frame(max_v);
  auto px = [&](double x) { return kLeft + f.plot_w() * (0.05 + 0.9 * (x - x_lo) / (x_hi - x_lo)); };
  std::string out = open_svg(title, y_label, f);
  out += "<text x=\"" + num(kLeft + f.plot_w() / 2) + "\" y=\"" + num(kTop + f.plot_h() + 34) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + esc(x_label) + "</text>\n";
  std::set<double> xs;
  for (const auto& s : series) xs.insert(s.x.begin(), s.x.end());
  for (double x : xs)
    out += "<text x=\"" + num(px(x)) + "\" y=\"" + num(kTop + f.plot_h() + 16) + "\" text-anchor=\"middle\" font-size=\"10\">" +
           tick_label(x) + "</text>\n";
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    labels.push_back(s.label);
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.median[k])) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(s.x[k])) + "," + num(f.y(s.median[k]));
      if (k < s.q1.size() && std::isfinite(s.q1[k]) && std::isfinite(s.q3[k]))
        out += "<line x1=\"" + num(px(s.x[k])) + "\" y1=\"" + num(f.y(s.q1[k])) + "\" x2=\"" + num(px(s.x[k])) +
               "\" y2=\"" + num(f.y(s.q3[k])) + "\" stroke=\"" + color(i) + "\" stroke-opacity=\"0.5\"/>\n";
      out += "<circle cx=\"" + num(px(s.x[k])) + "\" cy=\"" + num(f.y(s.median[k])) + "\" r=\"3\" fill=\"" + color(i) +
             "\"/>\n";
    }
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color(i) + "\" stroke-width=\"2\"/>\n";
  }
  out += legend(labels);
  out += "</svg>\n";
  return out;
}

std::vector<std::string> write_plots(const std::vector<MetricRow>& rows, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw ConfigError("no metric rows to plot");
  const bool sweep = !rows.front().extra.empty();
  // Methods and environments in first-appearance order keep the layout stable.
  std::vector<std::string> methods;
  std::vector<std::string> metrics;
  std::vector<std::string> envs;
  auto add = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : rows) {
    add(methods, r.record.method);
    add(metrics, r.record.metric);
    if (r.record.environment != "all") add(envs, r.record.environment);
  }
  std::vector<std::string> written;
  auto emit = [&](const std::string& family, const std::string& metric, const std::string& svg) {
    const auto path = out_dir / (family + "_" + metric + ".svg");
    write_text_file(path, svg);
    written.push_back(path.string());
  };

  if (sweep) {
    const std::string param = rows.front().extra.front().first;
    for (const auto& metric : metrics) {
      std::vector<LineSeries> series;
      for (const auto& m : methods) {
        std::map<double, std::vector<double>> by_x;
        for (const auto& r : rows)
          if (r.record.method == m && r.record.metric == metric && r.record.environment == "all")
            by_x[parse_double(r.extra.front().second)].push_back(r.record.value);
        if (by_x.empty()) continue;
        LineSeries ls;
        ls.label = m;
        for (const auto& [x, vals] : by_x) {
          const auto fin = finite_only(vals);
          ls.x.push_back(x);
          const double nan = std::nan("");
          ls.median.push_back(fin.empty() ? nan : quantile(fin, 0.5));
          ls.q1.push_back(fin.empty() ? nan : quantile(fin, 0.25));
          ls.q3.push_back(fin.empty() ? nan : quantile(fin, 0.75));
        }
        series.push_back(std::move(ls));
      }
      if (!series.empty()) emit("sweep", metric, svg_line_chart(metric + " by " + param, param, metric, series));
    }
    return written;
  }

  for (const auto& metric : metrics) {
    std::vector<BoxSeries> boxes;
    for (const auto& m : methods) {
      BoxSeries b;
      b.label = m;
      for (const auto& r : rows)
        if (r.record.method == m && r.record.metric == metric && r.record.environment == "all")
          b.values.push_back(r.record.value);
      if (!b.values.empty()) boxes.push_back(std::move(b));
    }
    if (!boxes.empty()) emit("methods", metric, svg_box_chart(metric + " by method", metric, boxes));

    std::vector<MetricRecord> per_env;
    for (const auto& r : rows)
      if (r.record.metric == metric && r.record.environment != "all") per_env.push_back(r.record);
    if (per_env.empty()) continue;
    std::map<std::pair<std::string, std::string>, BarCell> cells;
    for (const auto& s : summarize(per_env)) cells[{s.environment, s.method}] = {s.median, s.q1, s.q3};
    std::vector<std::string> env_order;
    for (const auto& e : envs)
      for (const auto& r : per_env)
        if (r.environment == e) {
          env_order.push_back(e);
          break;
        }
    emit("environments", metric, svg_grouped_bars(metric + " by environment", metric, env_order, methods, cells));
  }
  return written;
}

}  // namespace ebcrl
