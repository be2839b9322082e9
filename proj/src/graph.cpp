#include "hact/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hact/errors.hpp"
#include "hact/io.hpp"

namespace hact {

using nlohmann::json;

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("FeatureMatrix: data size " + std::to_string(data_.size()) +
                                " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, FeatureMatrix features,
             std::vector<std::string> schema)
    : num_nodes_(num_nodes),
      edges_(std::move(edges)),
      features_(std::move(features)),
      schema_(std::move(schema)) {
  for (auto& e : edges_) e = Edge::make(e.a, e.b);
  std::sort(edges_.begin(), edges_.end());
}

std::vector<NodeIndex> Graph::neighbors(NodeIndex v) const {
  if (v >= num_nodes_) {
    throw std::out_of_range("node " + std::to_string(v) + " out of range for graph with " +
                            std::to_string(num_nodes_) + " nodes");
  }
  std::vector<NodeIndex> out;
  for (const auto& e : edges_) {
    if (e.a == v && e.b != v) out.push_back(e.b);
    if (e.b == v && e.a != v) out.push_back(e.a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Adjacency Graph::adjacency() const {
  Adjacency adj;
  adj.offsets.assign(num_nodes_ + 1, 0);
  for (const auto& e : edges_) {
    ++adj.offsets[e.a + 1];
    ++adj.offsets[e.b + 1];
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) adj.offsets[i + 1] += adj.offsets[i];
  adj.indices.resize(adj.offsets.back());
  auto cursor = adj.offsets;
  // edges are sorted, so each neighbor list comes out ascending
  for (const auto& e : edges_) adj.indices[cursor[e.a]++] = e.b;
  for (const auto& e : edges_) adj.indices[cursor[e.b]++] = e.a;
  for (std::size_t v = 0; v < num_nodes_; ++v) {
    std::sort(adj.indices.begin() + static_cast<std::ptrdiff_t>(adj.offsets[v]),
              adj.indices.begin() + static_cast<std::ptrdiff_t>(adj.offsets[v + 1]));
  }
  return adj;
}

std::vector<std::string> validate(const Graph& g) {
  std::vector<std::string> out;
  const auto n = g.num_nodes();
  std::set<Edge> seen;
  for (const auto& e : g.edges()) {
    if (e.a >= n || e.b >= n) {
      out.push_back("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                    ") references node outside [0," + std::to_string(n) + ")");
      continue;
    }
    if (e.a == e.b) {
      out.push_back("self-loop at node " + std::to_string(e.a));
      continue;
    }
    if (!seen.insert(e).second) {
      out.push_back("duplicate edge (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
    }
  }
  if (g.features().rows() != n) {
    out.push_back("feature row count " + std::to_string(g.features().rows()) +
                  " != num_nodes " + std::to_string(n));
  }
  if (g.features().cols() != g.schema().size()) {
    out.push_back("feature dim " + std::to_string(g.features().cols()) + " != schema length " +
                  std::to_string(g.schema().size()));
  }
  for (std::size_t r = 0; r < g.features().rows(); ++r) {
    const auto row = g.features().row(r);
    if (!std::all_of(row.begin(), row.end(), [](double x) { return std::isfinite(x); })) {
      out.push_back("non-finite feature, node " + std::to_string(r));
    }
  }
  return out;
}

HactValidation validate(const HactGraph& h) {
  HactValidation v;
  for (auto& m : validate(h.cell_graph)) v.violations.push_back("cell_graph: " + m);
  for (auto& m : validate(h.tissue_graph)) v.violations.push_back("tissue_graph: " + m);
  const auto& a = h.assignment.cell_to_tissue;
  if (a.size() != h.cell_graph.num_nodes()) {
    v.violations.push_back("assignment length " + std::to_string(a.size()) +
                           " != cell node count " + std::to_string(h.cell_graph.num_nodes()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] >= h.tissue_graph.num_nodes()) {
      v.violations.push_back("assignment of cell " + std::to_string(i) + " -> " +
                             std::to_string(a[i]) + " outside tissue graph");
    }
  }
  if (h.cell_graph.num_nodes() < h.tissue_graph.num_nodes()) {
    v.warnings.push_back("fewer cell nodes (" + std::to_string(h.cell_graph.num_nodes()) +
                         ") than tissue nodes (" + std::to_string(h.tissue_graph.num_nodes()) + ")");
  }
  return v;
}

GraphBatch disjoint_union(std::span<const Graph> graphs) {
  GraphBatch batch;
  batch.graph_offsets.push_back(0);
  if (graphs.empty()) return batch;
  const auto& schema = graphs.front().schema();
  const auto dim = graphs.front().feature_dim();
  std::size_t total = 0;
  for (const auto& g : graphs) {
    if (g.schema() != schema || g.feature_dim() != dim) {
      throw DataError("disjoint_union: feature schema mismatch");
    }
    total += g.num_nodes();
  }
  std::vector<double> data;
  data.reserve(total * dim);
  std::vector<Edge> edges;
  batch.graph_ids.reserve(total);
  std::size_t offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = graphs[gi];
    const auto base = static_cast<NodeIndex>(offset);
    for (const auto& e : g.edges()) edges.push_back({e.a + base, e.b + base});
    data.insert(data.end(), g.features().data().begin(), g.features().data().end());
    batch.graph_ids.insert(batch.graph_ids.end(), g.num_nodes(), static_cast<NodeIndex>(gi));
    offset += g.num_nodes();
    batch.graph_offsets.push_back(offset);
  }
  batch.merged = Graph(total, std::move(edges), FeatureMatrix(total, dim, std::move(data)), schema);
  return batch;
}

FeatureMatrix segment_sum(const FeatureMatrix& values, std::span<const NodeIndex> segment_ids,
                          std::size_t num_segments) {
  if (segment_ids.size() != values.rows()) {
    throw std::invalid_argument("segment_sum: id count != row count");
  }
  FeatureMatrix out(num_segments, values.cols());
  for (std::size_t r = 0; r < values.rows(); ++r) {
    if (segment_ids[r] >= num_segments) throw std::out_of_range("segment_sum: segment id out of range");
    auto dst = out.row(segment_ids[r]);
    const auto src = values.row(r);
    for (std::size_t c = 0; c < values.cols(); ++c) dst[c] += src[c];
  }
  return out;
}

namespace {

json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.a, e.b});
  json rows = json::array();
  for (std::size_t r = 0; r < g.features().rows(); ++r) {
    const auto row = g.features().row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"num_nodes", g.num_nodes()},
              {"edges", std::move(edges)},
              {"feature_schema", g.schema()},
              {"node_features", std::move(rows)}};
}

Graph graph_from_json(const json& j, const char* which) {
  const std::string ctx = which;
  if (!j.is_object()) throw ParseError(ctx + ": expected object");
  const auto n = j.at("num_nodes").get<std::size_t>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw ParseError(ctx + ": edge must be a pair");
    edges.push_back({e[0].get<NodeIndex>(), e[1].get<NodeIndex>()});
  }
  auto schema = j.at("feature_schema").get<std::vector<std::string>>();
  const auto& rows = j.at("node_features");
  if (!rows.is_array()) throw ParseError(ctx + ": node_features must be an array");
  const std::size_t cols = schema.size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(ctx + ": feature row length does not match schema");
    }
    for (const auto& x : row) data.push_back(x.get<double>());
  }
  return Graph(n, std::move(edges), FeatureMatrix(rows.size(), cols, std::move(data)), std::move(schema));
}

}  // namespace

std::string serialize(const HactGraph& h) {
  json j;
  j["version"] = kHactFormatVersion;
  j["slide_id"] = h.slide_id;
  j["label"] = h.label ? json(*h.label) : json(nullptr);
  j["cell_graph"] = graph_to_json(h.cell_graph);
  j["tissue_graph"] = graph_to_json(h.tissue_graph);
  j["assignment"] = h.assignment.cell_to_tissue;
  return j.dump();
}

HactGraph deserialize(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("hact graph: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("version")) throw ParseError("hact graph: missing version");
    const int version = j.at("version").get<int>();
    if (version != kHactFormatVersion) {
      throw UnsupportedVersionError("hact graph: unsupported version " + std::to_string(version));
    }
    HactGraph h;
    h.slide_id = j.at("slide_id").get<std::string>();
    if (!j.at("label").is_null()) h.label = j.at("label").get<int>();
    h.cell_graph = graph_from_json(j.at("cell_graph"), "cell_graph");
    h.tissue_graph = graph_from_json(j.at("tissue_graph"), "tissue_graph");
    h.assignment.cell_to_tissue = j.at("assignment").get<std::vector<NodeIndex>>();
    return h;
  } catch (const json::exception& e) {
    throw ParseError(std::string("hact graph: ") + e.what());
  }
}

void write_hact_file(const std::filesystem::path& path, const HactGraph& h) {
  write_text_file(path, serialize(h));
}

HactGraph read_hact_file(const std::filesystem::path& path) {
  try {
    return deserialize(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace hact
