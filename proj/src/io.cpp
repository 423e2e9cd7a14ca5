#include "ubeta/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace ubeta {

using nlohmann::json;

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.good()) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

// raw JSON emission so every number is written with 17 significant digits
void append_number(std::string& out, double x) { out += format_number(x); }

std::string chart_kind_name(Chart::Kind k) {
    switch (k) {
        case Chart::Kind::lattice: return "lattice";
        case Chart::Kind::cone: return "cone";
        case Chart::Kind::cylinder: return "cylinder";
        case Chart::Kind::radial: return "radial";
        case Chart::Kind::none: break;
    }
    return "none";
}

Chart::Kind chart_kind_of(const std::string& name) {
    if (name == "lattice") return Chart::Kind::lattice;
    if (name == "cone") return Chart::Kind::cone;
    if (name == "cylinder") return Chart::Kind::cylinder;
    if (name == "radial") return Chart::Kind::radial;
    return Chart::Kind::none;
}

}  // namespace

void save_space(const Space& s, const std::string& path) {
    std::string out;
    out.reserve(64 * s.size());
    out += "{\n\"backend\": \"";
    out += s.backend == Backend::radial ? "radial" : "graph";
    out += "\",\n\"N\": ";
    append_number(out, s.dim);
    out += ",\n\"label\": ";
    out += json(s.label).dump();
    out += ",\n\"crossSectionMass\": ";
    append_number(out, s.cross_section_mass);
    out += ",\n\"vertices\": [\n";
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
        const auto& v = s.vertices[i];
        out += "{\"id\": ";
        out += std::to_string(i);
        if (!v.pos.empty()) {
            out += ", \"pos\": [";
            for (std::size_t k = 0; k < v.pos.size(); ++k) {
                if (k) out += ", ";
                append_number(out, v.pos[k]);
            }
            out += "]";
        }
        out += ", \"measure\": ";
        append_number(out, v.measure);
        out += i + 1 < s.vertices.size() ? "},\n" : "}\n";
    }
    out += "],\n\"edges\": [\n";
    for (std::size_t i = 0; i < s.edges.size(); ++i) {
        const auto& e = s.edges[i];
        out += "{\"a\": ";
        out += std::to_string(e.a);
        out += ", \"b\": ";
        out += std::to_string(e.b);
        out += ", \"weight\": ";
        append_number(out, e.weight);
        out += ", \"length\": ";
        append_number(out, e.length);
        out += i + 1 < s.edges.size() ? "},\n" : "}\n";
    }
    out += "]";
    if (s.chart.kind != Chart::Kind::none) {
        out += ",\n\"chart\": {\"kind\": \"";
        out += chart_kind_name(s.chart.kind);
        out += "\", \"wrapLast\": ";
        out += s.chart.wrap_last ? "true" : "false";
        out += ", \"wrapPeriod\": ";
        append_number(out, s.chart.wrap_period);
        out += ", \"axes\": [";
        for (std::size_t k = 0; k < s.chart.axes.size(); ++k) {
            if (k) out += ", ";
            out += "[";
            for (std::size_t j = 0; j < s.chart.axes[k].size(); ++j) {
                if (j) out += ", ";
                append_number(out, s.chart.axes[k][j]);
            }
            out += "]";
        }
        out += "]}";
    }
    out += ",\n\"boundary\": [";
    bool first = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.is_boundary(static_cast<VertexId>(i))) continue;
        if (!first) out += ", ";
        out += std::to_string(i);
        first = false;
    }
    out += "]\n}\n";
    atomic_write(path, out);
}

Space load_space(const std::string& path) {
    json j = json::parse(read_text(path));
    Space s;
    s.backend = j.value("backend", std::string("graph")) == "radial" ? Backend::radial : Backend::graph;
    s.dim = j.value("N", 0.0);
    s.label = j.value("label", std::string{});
    s.cross_section_mass = j.value("crossSectionMass", 0.0);

    std::unordered_map<std::int64_t, VertexId> remap;
    const auto& verts = j.at("vertices");
    s.vertices.resize(verts.size());
    std::size_t next = 0;
    for (const auto& jv : verts) {
        auto id = jv.at("id").get<std::int64_t>();
        remap[id] = static_cast<VertexId>(next);
        Vertex v;
        v.measure = jv.at("measure").get<double>();
        if (jv.contains("pos")) v.pos = jv.at("pos").get<std::vector<double>>();
        s.vertices[next++] = std::move(v);
    }
    if (j.contains("edges"))
        for (const auto& je : j.at("edges")) {
            Edge e;
            e.a = remap.at(je.at("a").get<std::int64_t>());
            e.b = remap.at(je.at("b").get<std::int64_t>());
            e.weight = je.at("weight").get<double>();
            e.length = je.at("length").get<double>();
            s.edges.push_back(e);
        }
    if (j.contains("chart")) {
        const auto& jc = j.at("chart");
        s.chart.kind = chart_kind_of(jc.value("kind", std::string("none")));
        s.chart.wrap_last = jc.value("wrapLast", false);
        s.chart.wrap_period = jc.value("wrapPeriod", 0.0);
        if (jc.contains("axes")) s.chart.axes = jc.at("axes").get<std::vector<std::vector<double>>>();
    }
    if (j.contains("boundary")) {
        std::vector<char> mask(s.vertices.size(), 0);
        for (const auto& jb : j.at("boundary")) mask[static_cast<std::size_t>(remap.at(jb.get<std::int64_t>()))] = 1;
        s.set_boundary(std::move(mask));
    }
    s.finalize();
    return s;
}

void save_field(const ScalarField& f, const std::string& path) {
    std::string out = "id,value\n";
    for (std::size_t i = 0; i < f.values().size(); ++i) {
        if (!f.defined(static_cast<VertexId>(i))) continue;
        out += std::to_string(i);
        out += ",";
        out += format_number(f[static_cast<VertexId>(i)]);
        out += "\n";
    }
    atomic_write(path, out);
}

ScalarField load_field(const Space& s, const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty field file: " + path);
    ScalarField f(s);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("bad field row: " + line);
        auto id = static_cast<VertexId>(std::stoll(line.substr(0, comma)));
        double value = std::stod(line.substr(comma + 1));
        if (id < 0 || static_cast<std::size_t>(id) >= s.size())
            throw std::runtime_error("field vertex id out of range: " + line);
        f.set(id, value);
    }
    return f;
}

void save_vertex_set(const std::vector<char>& mask, const std::string& path) {
    std::string out = "{\"ids\": [";
    bool first = true;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        if (!first) out += ", ";
        out += std::to_string(i);
        first = false;
    }
    out += "]}\n";
    atomic_write(path, out);
}

std::vector<char> load_vertex_set(const Space& s, const std::string& path) {
    json j = json::parse(read_text(path));
    const json& ids = j.is_array() ? j : j.at("ids");
    std::vector<char> mask(s.size(), 0);
    for (const auto& ji : ids) {
        auto id = ji.get<std::int64_t>();
        if (id < 0 || static_cast<std::size_t>(id) >= s.size())
            throw std::runtime_error("vertex id out of range in " + path);
        mask[static_cast<std::size_t>(id)] = 1;
    }
    return mask;
}

}  // namespace ubeta
