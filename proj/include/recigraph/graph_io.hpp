#pragma once

#include <filesystem>
#include <string>

#include "recigraph/graph.hpp"

namespace recigraph {

// TSV graph format, one directory per graph:
//   nodes.tsv            <id>\t<type>\t<cuisine_label>\t<region_label>  ('-' = none)
//   edges.tsv            <relation>\t<src_id>\t<dst_id>
//   attrs.<modality>.tsv <id>\t<f1>,<f2>,...
// '#'-prefixed lines are comments. Canonical order: nodes ascending id,
// edges ascending (relation, src, dst).

HetGraph load_graph(const std::filesystem::path& dir);
void save_graph(const HetGraph& g, const std::filesystem::path& dir);

// The canonical byte serialization of all graph files, used for hashing and
// round-trip checks.
std::string canonical_serialization(const HetGraph& g);

std::string canonical_nodes(const HetGraph& g);
std::string canonical_edges(const HetGraph& g);
std::string canonical_attrs(const HetGraph& g, Modality m);

// Exact round-trip formatting for doubles (%.17g).
std::string format_double(double v);

}  // namespace recigraph
