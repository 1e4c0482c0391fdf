// plots.hpp - render SVG figures from an output directory

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtc/types.hpp"
#include "svg_plot.hpp"

namespace dtc::plots {

// Tab-separated table with a header row.
class Table {
public:
    static Table read(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read " + path.string(), "--out");
        Table t;
        t.path_ = path.string();
        std::string line;
        if (!std::getline(in, line)) throw ConfigError("empty table " + path.string(), "--out");
        t.columns_ = split(line);
        while (std::getline(in, line)) {
            if (!line.empty()) t.rows_.push_back(split(line));
        }
        return t;
    }

    bool has(const std::string& name) const { return index(name) >= 0; }
    std::size_t size() const { return rows_.size(); }

    std::vector<double> numbers(const std::string& name) const
    {
        const int i = require(name);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(std::stod(r.at(static_cast<std::size_t>(i))));
        return out;
    }

    std::vector<std::string> strings(const std::string& name) const
    {
        const int i = require(name);
        std::vector<std::string> out;
        for (const auto& r : rows_) out.push_back(r.at(static_cast<std::size_t>(i)));
        return out;
    }

private:
    static std::vector<std::string> split(const std::string& line)
    {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, '\t')) out.push_back(cell);
        return out;
    }

    int index(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (columns_[i] == name) return static_cast<int>(i);
        }
        return -1;
    }

    int require(const std::string& name) const
    {
        const int i = index(name);
        if (i < 0) throw ConfigError("missing column '" + name + "' in " + path_, "--out");
        return i;
    }

    std::string path_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::string stem_of(const std::string& file, const std::string& suffix) { return file.substr(0, file.size() - suffix.size()); }

// Times at which the stroke tag changes.
inline std::vector<double> stroke_boundaries(const Table& t)
{
    const auto time = t.numbers("time");
    const auto tag = t.strings("stroke_tag");
    std::vector<double> out;
    for (std::size_t i = 1; i < time.size(); ++i) {
        if (tag[i] != tag[i - 1]) out.push_back(time[i]);
    }
    return out.size() > 400 ? std::vector<double>{} : out;
}

inline void plot_signature(const std::filesystem::path& file, const std::string& stem, const std::filesystem::path& dir)
{
    const Table t = Table::read(file);
    svg::Panel p{stem, "t", "<S_x>", {}, stroke_boundaries(t), false};
    p.series.push_back({"plain", t.numbers("time"), t.numbers("signature"), false});
    if (t.has("signature_measured")) p.series.push_back({"measured", t.numbers("time"), t.numbers("signature_measured"), false});
    svg::Document doc(900, 340);
    doc.panel(p, 0, 0, 900, 340);
    doc.save((dir / (stem + ".signature.svg")).string());
}

inline void plot_trace(const std::filesystem::path& file, const std::string& stem, const std::filesystem::path& dir)
{
    const Table t = Table::read(file);
    const auto time = t.numbers("time");
    const auto bounds = stroke_boundaries(t);
    std::vector<svg::Panel> panels;
    panels.push_back({"signature", "t", "<S_x>", {{"", time, t.numbers("signature"), false}}, bounds, false});
    panels.push_back({"energy", "t", "U", {{"", time, t.numbers("energy"), false}}, bounds, false});
    svg::Panel heat{"heat rate and switch work", "t", "Qdot, W", {{"Qdot", time, t.numbers("heat_rate"), false}}, bounds, false};
    const auto work_file = dir / (stem + ".work.tsv");
    if (std::filesystem::exists(work_file)) {
        const Table w = Table::read(work_file);
        heat.series.push_back({"W", w.numbers("time"), w.numbers("W"), true});
    }
    panels.push_back(std::move(heat));
    panels.push_back({"entropy", "t", "S, Sdot, sigma",
                      {{"S", time, t.numbers("entropy"), false},
                       {"Sdot", time, t.numbers("entropy_rate"), false},
                       {"sigma", time, t.numbers("entropy_production"), false}},
                      bounds, false});
    panels.push_back({"half-chain entropy", "t", "S_half", {{"", time, t.numbers("half_chain_entropy"), false}}, bounds, false});
    panels.push_back({"fidelity with thermal states", "t", "F",
                      {{"F(H_z)", time, t.numbers("fidelity_z"), false}, {"F(H_x)", time, t.numbers("fidelity_x"), false}},
                      bounds, false});
    svg::Document doc(1200, 720);
    for (std::size_t i = 0; i < panels.size(); ++i) {
        doc.panel(panels[i], 400.0 * static_cast<double>(i % 3), 360.0 * static_cast<double>(i / 3), 400, 360);
    }
    doc.save((dir / (stem + ".trace.svg")).string());
}

inline void plot_prefix(const std::filesystem::path& file, const std::string& stem, const std::filesystem::path& dir)
{
    const Table t = Table::read(file);
    const auto T = t.numbers("T");
    svg::Document doc(1200, 340);
    const char* names[] = {"M", "dw", "A"};
    for (int i = 0; i < 3; ++i) {
        svg::Panel p{stem + " " + names[i], "T (periods)", names[i], {{"", T, t.numbers(names[i]), false}}, {}, true};
        doc.panel(p, 400.0 * i, 0, 400, 340);
    }
    doc.save((dir / (stem + ".prefix.svg")).string());
}

// E_r heatmaps over (t, beta) and statistics-vs-beta panels, grouped by
// (N, axis, Gamma) from aggregate.json.
inline int plot_aggregate(const std::filesystem::path& dir)
{
    const auto agg_path = dir / "aggregate.json";
    if (!std::filesystem::exists(agg_path)) return 0;
    std::ifstream in(agg_path);
    const nlohmann::json agg = nlohmann::json::parse(in);
    const std::string protocol = agg.at("protocol").get<std::string>();
    int written = 0;

    auto group_key = [](const nlohmann::json& r) {
        return "N" + std::to_string(r.at("N").get<int>()) + "_" + r.at("axis").get<std::string>() + "_Gamma" +
               svg::num(r.at("Gamma").get<double>());
    };

    if (protocol == "measured-average") {
        std::map<std::string, std::map<double, std::string>> groups;  // key -> beta -> run name (realization 0)
        for (const auto& r : agg.at("runs")) {
            if (r.at("realization").get<int>() != 0) continue;
            groups[group_key(r)][r.at("beta").get<double>()] = r.at("name").get<std::string>();
        }
        for (const auto& [key, by_beta] : groups) {
            if (by_beta.size() < 2) continue;
            std::vector<double> times;
            std::vector<std::string> labels;
            std::vector<std::vector<double>> values;
            for (const auto& [beta, name] : by_beta) {
                const Table t = Table::read(dir / (name + ".er.tsv"));
                if (times.empty()) times = t.numbers("time");
                labels.push_back(svg::num(beta));
                values.push_back(t.numbers("E_r"));
            }
            svg::Document doc(900, 420);
            doc.heatmap("E_r " + key, "t", "beta", times, labels, values, 0, 0, 900, 420);
            doc.save((dir / ("er_heatmap_" + key + ".svg")).string());
            ++written;
        }
    }
    if (protocol == "trajectories") {
        std::map<std::string, std::vector<const nlohmann::json*>> groups;
        for (const auto& p : agg.at("points")) groups[group_key(p)].push_back(&p);
        for (const auto& [key, points] : groups) {
            if (points.size() < 2) continue;
            svg::Document doc(1200, 340);
            const char* names[] = {"M", "dw", "A"};
            for (int i = 0; i < 3; ++i) {
                svg::Series s{"", {}, {}, true};
                for (const auto* p : points) {
                    s.x.push_back(p->at("beta").get<double>());
                    s.y.push_back(p->at(std::string("mean_") + names[i]).get<double>());
                }
                svg::Panel panel{key + " " + names[i], "beta", names[i], {s}, {}, true};
                doc.panel(panel, 400.0 * i, 0, 400, 340);
            }
            doc.save((dir / ("stats_vs_beta_" + key + ".svg")).string());
            ++written;
        }
    }
    return written;
}

// Returns the number of SVG files written.
inline int emit_plots(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string(), "--out");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int written = 0;
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        if (ends_with(name, ".signature.tsv")) plot_signature(f, stem_of(name, ".signature.tsv"), dir), ++written;
        else if (ends_with(name, ".trace.tsv")) plot_trace(f, stem_of(name, ".trace.tsv"), dir), ++written;
        else if (ends_with(name, ".prefix.tsv")) plot_prefix(f, stem_of(name, ".prefix.tsv"), dir), ++written;
    }
    return written + plot_aggregate(dir);
}

} // namespace dtc::plots
