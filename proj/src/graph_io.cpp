#include "recigraph/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace recigraph {

namespace {

struct Line {
    std::size_t number;
    std::vector<std::string> fields;
};

std::vector<Line> read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<Line> lines;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty() || raw[0] == '#') continue;
        Line line{number, {}};
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = raw.find('\t', start);
            if (tab == std::string::npos) {
                line.fields.push_back(raw.substr(start));
                break;
            }
            line.fields.push_back(raw.substr(start, tab - start));
            start = tab + 1;
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t number,
                             const std::string& what) {
    throw DataError(path.filename().string() + ":" + std::to_string(number) + ": " + what);
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t number) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        line_error(path, number, "bad number '" + s + "'");
    }
}

}  // namespace

std::string format_double(double v) {
    // Shortest decimal that parses back to exactly the same double.
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

HetGraph load_graph(const std::filesystem::path& dir) {
    const std::filesystem::path node_path = dir / "nodes.tsv";
    const std::filesystem::path edge_path = dir / "edges.tsv";

    HetGraph g;
    {
        // Nodes may arrive in any order; the graph stores them sorted by id.
        struct RawNode {
            std::string id;
            NodeType type;
            std::string cuisine, region;
            std::size_t line;
        };
        std::vector<RawNode> raw;
        for (const Line& line : read_tsv(node_path)) {
            if (line.fields.size() < 2 || line.fields.size() > 4) {
                line_error(node_path, line.number,
                           "expected <id>\\t<type>[\\t<cuisine>\\t<region>], got " +
                               std::to_string(line.fields.size()) + " fields");
            }
            RawNode n;
            n.id = line.fields[0];
            try {
                n.type = node_type_from(line.fields[1]);
            } catch (const DataError& e) {
                line_error(node_path, line.number, e.what());
            }
            n.cuisine = line.fields.size() > 2 ? line.fields[2] : "-";
            n.region = line.fields.size() > 3 ? line.fields[3] : "-";
            n.line = line.number;
            raw.push_back(std::move(n));
        }
        std::sort(raw.begin(), raw.end(),
                  [](const RawNode& a, const RawNode& b) { return a.id < b.id; });
        for (const RawNode& n : raw) {
            NodeIndex v = 0;
            try {
                v = g.add_node(n.id, n.type);
            } catch (const DataError& e) {
                line_error(node_path, n.line, e.what());
            }
            try {
                if (n.cuisine != "-") g.set_label(Task::Cuisine, v, n.cuisine);
                if (n.region != "-") g.set_label(Task::Region, v, n.region);
            } catch (const DataError& e) {
                line_error(node_path, n.line, e.what());
            }
        }
    }

    for (const Line& line : read_tsv(edge_path)) {
        if (line.fields.size() != 3) {
            line_error(edge_path, line.number, "expected <relation>\\t<src>\\t<dst>");
        }
        try {
            const RelationType r = relation_from(line.fields[0]);
            if (!g.has_node(line.fields[1])) {
                throw DataError("unknown node id '" + line.fields[1] + "'");
            }
            if (!g.has_node(line.fields[2])) {
                throw DataError("unknown node id '" + line.fields[2] + "'");
            }
            g.add_edge(r, g.index_of(line.fields[1]), g.index_of(line.fields[2]));
        } catch (const DataError& e) {
            line_error(edge_path, line.number, e.what());
        }
    }

    for (std::size_t mi = 0; mi < kModalityCount; ++mi) {
        const Modality m = static_cast<Modality>(mi);
        const std::filesystem::path attr_path =
            dir / ("attrs." + std::string(to_string(m)) + ".tsv");
        if (!std::filesystem::exists(attr_path)) continue;
        for (const Line& line : read_tsv(attr_path)) {
            if (line.fields.size() != 2) {
                line_error(attr_path, line.number, "expected <id>\\t<v1>,<v2>,...");
            }
            if (!g.has_node(line.fields[0])) {
                line_error(attr_path, line.number, "unknown node id '" + line.fields[0] + "'");
            }
            std::vector<double> values;
            std::stringstream ss(line.fields[1]);
            std::string item;
            while (std::getline(ss, item, ',')) {
                values.push_back(parse_double(item, attr_path, line.number));
            }
            try {
                g.set_attribute(m, g.index_of(line.fields[0]), std::move(values));
            } catch (const DataError& e) {
                line_error(attr_path, line.number, e.what());
            }
        }
    }

    g.finalize();
    return g;
}

std::string canonical_nodes(const HetGraph& g) {
    std::string out = "#id\ttype\tcuisine\tregion\n";
    for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
        const std::string* cuisine = g.raw_label(Task::Cuisine, v);
        const std::string* region = g.raw_label(Task::Region, v);
        out += g.id(v);
        out += '\t';
        out += to_string(g.type(v));
        out += '\t';
        out += cuisine ? *cuisine : "-";
        out += '\t';
        out += region ? *region : "-";
        out += '\n';
    }
    return out;
}

std::string canonical_edges(const HetGraph& g) {
    std::string out = "#relation\tsrc\tdst\n";
    for (const RelationType r : kStoredRelations) {
        for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
            for (const NodeIndex w : g.neighbors(v, r)) {
                if (w < v) continue;  // each undirected edge once, smaller id first
                out += to_string(r);
                out += '\t';
                out += g.id(v);
                out += '\t';
                out += g.id(w);
                out += '\n';
            }
        }
    }
    return out;
}

std::string canonical_attrs(const HetGraph& g, Modality m) {
    std::string out = "#id\tvalues\n";
    for (NodeIndex v = 0; v < g.num_nodes(); ++v) {
        if (!g.has_attribute(v, m)) continue;
        out += g.id(v);
        out += '\t';
        const std::span<const double> row = g.attribute(v, m);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string canonical_serialization(const HetGraph& g) {
    std::string out = canonical_nodes(g) + canonical_edges(g);
    for (std::size_t mi = 0; mi < kModalityCount; ++mi) {
        const Modality m = static_cast<Modality>(mi);
        if (g.attribute_dim(m) == 0) continue;
        out += canonical_attrs(g, m);
    }
    return out;
}

void save_graph(const HetGraph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::filesystem::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write " + path.string());
        out << content;
    };
    write(dir / "nodes.tsv", canonical_nodes(g));
    write(dir / "edges.tsv", canonical_edges(g));
    for (std::size_t mi = 0; mi < kModalityCount; ++mi) {
        const Modality m = static_cast<Modality>(mi);
        if (g.attribute_dim(m) == 0) continue;
        write(dir / ("attrs." + std::string(to_string(m)) + ".tsv"), canonical_attrs(g, m));
    }
}

}  // namespace recigraph
