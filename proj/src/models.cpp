#include "hact/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "hact/errors.hpp"
#include "hact/rng.hpp"

namespace hact {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::CG: return "cg";
    case Variant::TG: return "tg";
    case Variant::Concat: return "concat";
    case Variant::Hact: return "hact";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto v : {Variant::CG, Variant::TG, Variant::Concat, Variant::Hact}) {
    if (lower == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected cg, tg, concat or hact)");
}

namespace {

void column_stats(std::span<const HactGraph* const> graphs, bool cells, std::vector<double>& mean,
                  std::vector<double>& sd) {
  std::size_t dim = 0, n = 0;
  for (const auto* g : graphs) {
    const auto& f = (cells ? g->cell_graph : g->tissue_graph).features();
    if (n == 0) dim = f.cols();
    if (f.rows() > 0 && f.cols() != dim) throw DataError("inconsistent feature widths across graphs");
    n += f.rows();
  }
  mean.assign(dim, 0.0);
  sd.assign(dim, 1.0);
  if (n == 0) return;
  for (const auto* g : graphs) {
    const auto& f = (cells ? g->cell_graph : g->tissue_graph).features();
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t c = 0; c < dim; ++c) mean[c] += f(r, c);
    }
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  std::vector<double> var(dim, 0.0);
  for (const auto* g : graphs) {
    const auto& f = (cells ? g->cell_graph : g->tissue_graph).features();
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t c = 0; c < dim; ++c) var[c] += (f(r, c) - mean[c]) * (f(r, c) - mean[c]);
    }
  }
  for (std::size_t c = 0; c < dim; ++c) {
    const double s = std::sqrt(var[c] / static_cast<double>(n));
    sd[c] = s > 1e-12 ? s : 1.0;
  }
}

void directed_edges(const Graph& g, std::vector<NodeIndex>& src, std::vector<NodeIndex>& dst) {
  src.reserve(2 * g.num_edges());
  dst.reserve(2 * g.num_edges());
  for (const auto& e : g.edges()) {
    src.push_back(e.a);
    dst.push_back(e.b);
    src.push_back(e.b);
    dst.push_back(e.a);
  }
}

std::vector<double> normalized(const FeatureMatrix& f, const std::vector<double>& mean, const std::vector<double>& sd) {
  if (f.cols() != mean.size()) {
    throw DataError("feature width " + std::to_string(f.cols()) + " does not match normalization width " +
                    std::to_string(mean.size()));
  }
  std::vector<double> out(f.data());
  for (std::size_t r = 0; r < f.rows(); ++r) {
    for (std::size_t c = 0; c < f.cols(); ++c) out[r * f.cols() + c] = (out[r * f.cols() + c] - mean[c]) / sd[c];
  }
  return out;
}

}  // namespace

Normalization Normalization::fit(std::span<const HactGraph* const> graphs) {
  Normalization n;
  column_stats(graphs, true, n.cell_mean, n.cell_std);
  column_stats(graphs, false, n.tissue_mean, n.tissue_std);
  return n;
}

Normalization Normalization::identity(std::size_t cell_dim, std::size_t tissue_dim) {
  return {std::vector<double>(cell_dim, 0.0), std::vector<double>(cell_dim, 1.0),
          std::vector<double>(tissue_dim, 0.0), std::vector<double>(tissue_dim, 1.0)};
}

PreparedGraph prepare_graph(const HactGraph& h, const Normalization& norm) {
  PreparedGraph p;
  p.num_cells = h.cell_graph.num_nodes();
  p.num_tissue = h.tissue_graph.num_nodes();
  p.cell_x = normalized(h.cell_graph.features(), norm.cell_mean, norm.cell_std);
  p.tissue_x = normalized(h.tissue_graph.features(), norm.tissue_mean, norm.tissue_std);
  directed_edges(h.cell_graph, p.cell_src, p.cell_dst);
  directed_edges(h.tissue_graph, p.tissue_src, p.tissue_dst);
  if (h.assignment.cell_to_tissue.size() != p.num_cells) throw DataError("assignment size differs from cell count");
  for (auto t : h.assignment.cell_to_tissue) {
    if (t >= p.num_tissue) throw DataError("assignment references a missing tissue node");
  }
  p.assignment = h.assignment.cell_to_tissue;
  p.label = h.label.value_or(-1);
  return p;
}

Batch make_batch(std::span<const PreparedGraph* const> graphs) {
  Batch b;
  b.num_graphs = graphs.size();
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const PreparedGraph& p = *graphs[g];
    if (p.num_cells > 0) b.cell_dim = p.cell_x.size() / p.num_cells;
    if (p.num_tissue > 0) b.tissue_dim = p.tissue_x.size() / p.num_tissue;
    const auto co = static_cast<NodeIndex>(b.num_cells);
    const auto to = static_cast<NodeIndex>(b.num_tissue);
    b.cell_x.insert(b.cell_x.end(), p.cell_x.begin(), p.cell_x.end());
    b.tissue_x.insert(b.tissue_x.end(), p.tissue_x.begin(), p.tissue_x.end());
    for (auto v : p.cell_src) b.cell_src.push_back(v + co);
    for (auto v : p.cell_dst) b.cell_dst.push_back(v + co);
    for (auto v : p.tissue_src) b.tissue_src.push_back(v + to);
    for (auto v : p.tissue_dst) b.tissue_dst.push_back(v + to);
    for (auto v : p.assignment) b.assignment.push_back(v + to);
    b.cell_graph.insert(b.cell_graph.end(), p.num_cells, static_cast<NodeIndex>(g));
    b.tissue_graph.insert(b.tissue_graph.end(), p.num_tissue, static_cast<NodeIndex>(g));
    b.num_cells += p.num_cells;
    b.num_tissue += p.num_tissue;
    b.labels.push_back(p.label);
  }
  return b;
}

void xavier_uniform(Tensor& w, CounterRng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (auto& x : w.data) x = rng.uniform(-bound, bound);
}

Model::Model(const ModelConfig& config) : cfg_(config) {
  if (cfg_.hidden < 1 || cfg_.classifier_hidden < 1 || cfg_.num_classes < 2 || cfg_.t_cg < 0 || cfg_.t_tg < 0) {
    throw std::invalid_argument("invalid model configuration");
  }
  norm_ = Normalization::identity(cfg_.cell_dim, cfg_.tissue_dim);
  init_parameters();
}

std::size_t Model::readout_dim() const {
  const auto h = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t cg = cfg_.cell_dim + static_cast<std::size_t>(cfg_.t_cg) * h;
  const std::size_t tg = cfg_.tissue_dim + static_cast<std::size_t>(cfg_.t_tg) * h;
  switch (cfg_.variant) {
    case Variant::CG: return cg;
    case Variant::TG: return tg;
    case Variant::Concat: return cg + tg;
    case Variant::Hact: return tg + (cfg_.t_cg > 0 ? h : cfg_.cell_dim);
  }
  return 0;
}

void Model::init_parameters() {
  const auto h = static_cast<std::size_t>(cfg_.hidden);
  auto make_linear = [](std::size_t in, std::size_t out) {
    return Linear{Tensor::parameter(in, out), Tensor::parameter(1, out)};
  };
  auto make_stack = [&](int layers, std::size_t in) {
    std::vector<GinLayer> out;
    for (int t = 0; t < layers; ++t) {
      out.push_back({make_linear(t == 0 ? in : h, h), make_linear(h, h)});
    }
    return out;
  };
  cg_layers_.clear();
  tg_layers_.clear();
  if (cfg_.uses_cells()) cg_layers_ = make_stack(cfg_.t_cg, cfg_.cell_dim);
  if (cfg_.uses_tissue()) {
    const std::size_t cg_out = cfg_.t_cg > 0 ? h : cfg_.cell_dim;
    const std::size_t tg_in = cfg_.tissue_dim + (cfg_.variant == Variant::Hact ? cg_out : 0);
    tg_layers_ = make_stack(cfg_.t_tg, tg_in);
  }
  fc1_ = make_linear(readout_dim(), static_cast<std::size_t>(cfg_.classifier_hidden));
  fc2_ = make_linear(static_cast<std::size_t>(cfg_.classifier_hidden), static_cast<std::size_t>(cfg_.num_classes));
  std::uint64_t index = 0;
  for (auto& p : parameters()) {
    CounterRng rng(CounterRng::derive(cfg_.seed, index++));
    // biases (single-row tensors named *.b) stay at zero
    if (p.name.back() == 'w') xavier_uniform(*p.tensor, rng);
  }
}

std::vector<NamedParameter> Model::parameters() {
  std::vector<NamedParameter> out;
  auto add_stack = [&](const std::string& prefix, std::vector<GinLayer>& layers) {
    for (std::size_t t = 0; t < layers.size(); ++t) {
      const std::string base = prefix + ".gin" + std::to_string(t);
      out.push_back({base + ".mlp0.w", &layers[t].l1.w});
      out.push_back({base + ".mlp0.b", &layers[t].l1.b});
      out.push_back({base + ".mlp1.w", &layers[t].l2.w});
      out.push_back({base + ".mlp1.b", &layers[t].l2.b});
    }
  };
  add_stack("cg", cg_layers_);
  add_stack("tg", tg_layers_);
  out.push_back({"classifier.fc0.w", &fc1_.w});
  out.push_back({"classifier.fc0.b", &fc1_.b});
  out.push_back({"classifier.fc1.w", &fc2_.w});
  out.push_back({"classifier.fc1.b", &fc2_.b});
  return out;
}

std::vector<Tensor*> Model::parameter_tensors() {
  std::vector<Tensor*> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

Var Model::linear(Tape& tape, Linear& l, Var x) { return ad::add(ad::matmul(x, tape.leaf(l.w)), tape.leaf(l.b)); }

Var Model::gin_stack(Tape& tape, std::vector<GinLayer>& layers, Var h, std::span<const NodeIndex> src,
                     std::span<const NodeIndex> dst, std::vector<Var>& per_layer) {
  per_layer.push_back(h);
  for (auto& layer : layers) {
    // (1 + eps) h_v + sum of neighbor states, eps = 0
    const Var agg = ad::add(h, ad::segment_sum(ad::row_gather(h, src), dst, h.rows()));
    h = ad::relu(linear(tape, layer.l2, ad::relu(linear(tape, layer.l1, agg))));
    per_layer.push_back(h);
  }
  return h;
}

Var Model::forward(Tape& tape, const Batch& batch) {
  if (batch.num_graphs == 0) throw std::invalid_argument("forward: empty batch");
  const auto require_nodes = [&](const std::vector<NodeIndex>& owner, const char* what) {
    std::vector<bool> seen(batch.num_graphs, false);
    for (auto g : owner) seen[g] = true;
    for (std::size_t g = 0; g < batch.num_graphs; ++g) {
      if (!seen[g]) {
        throw DataError(std::string(variant_name(cfg_.variant)) + " model given a graph without " + what +
                        " nodes (batch entry " + std::to_string(g) + ")");
      }
    }
  };
  if (cfg_.uses_cells()) require_nodes(batch.cell_graph, "cell");
  if (cfg_.uses_tissue()) require_nodes(batch.tissue_graph, "tissue");
  std::vector<Var> readouts;
  Var cell_final;
  if (cfg_.uses_cells()) {
    if (batch.cell_dim != cfg_.cell_dim) throw DataError("cell feature width does not match the model");
    Var x = tape.constant(Tensor(batch.num_cells, cfg_.cell_dim, batch.cell_x));
    std::vector<Var> layers;
    cell_final = gin_stack(tape, cg_layers_, x, batch.cell_src, batch.cell_dst, layers);
    if (cfg_.variant != Variant::Hact) {
      readouts.push_back(ad::segment_sum(ad::concat(layers, 1), batch.cell_graph, batch.num_graphs));
    }
  }
  if (cfg_.uses_tissue()) {
    if (batch.tissue_dim != cfg_.tissue_dim) throw DataError("tissue feature width does not match the model");
    Var x = tape.constant(Tensor(batch.num_tissue, cfg_.tissue_dim, batch.tissue_x));
    if (cfg_.variant == Variant::Hact) {
      // each tissue node receives the sum of its assigned cells' final states
      const std::vector<Var> parts{x, ad::segment_sum(cell_final, batch.assignment, batch.num_tissue)};
      x = ad::concat(parts, 1);
    }
    std::vector<Var> layers;
    gin_stack(tape, tg_layers_, x, batch.tissue_src, batch.tissue_dst, layers);
    readouts.push_back(ad::segment_sum(ad::concat(layers, 1), batch.tissue_graph, batch.num_graphs));
  }
  const Var embedding = readouts.size() == 1 ? readouts[0] : ad::concat(readouts, 1);
  return linear(tape, fc2_, ad::relu(linear(tape, fc1_, embedding)));
}

std::string model_config_to_json(const ModelConfig& cfg) {
  return json{{"variant", variant_name(cfg.variant)}, {"t_cg", cfg.t_cg},
              {"t_tg", cfg.t_tg},                      {"hidden", cfg.hidden},
              {"classifier_hidden", cfg.classifier_hidden}, {"num_classes", cfg.num_classes},
              {"cell_dim", cfg.cell_dim},              {"tissue_dim", cfg.tissue_dim},
              {"seed", cfg.seed}}
      .dump();
}

std::string checkpoint_to_json(Model& model) {
  json params = json::array();
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", {p.tensor->rows(), p.tensor->cols()}},
                      {"data", p.tensor->data}});
  }
  const auto& n = model.normalization();
  json doc = {{"version", kCheckpointVersion},
              {"config", json::parse(model_config_to_json(model.config()))},
              {"normalization",
               {{"cell_mean", n.cell_mean},
                {"cell_std", n.cell_std},
                {"tissue_mean", n.tissue_mean},
                {"tissue_std", n.tissue_std}}},
              {"params", params}};
  return doc.dump(1) + "\n";
}

Model model_from_checkpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw UnsupportedVersionError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto& c = doc.at("config");
    ModelConfig cfg;
    cfg.variant = parse_variant(c.at("variant").get<std::string>());
    cfg.t_cg = c.at("t_cg").get<int>();
    cfg.t_tg = c.at("t_tg").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.classifier_hidden = c.at("classifier_hidden").get<int>();
    cfg.num_classes = c.at("num_classes").get<int>();
    cfg.cell_dim = c.at("cell_dim").get<std::size_t>();
    cfg.tissue_dim = c.at("tissue_dim").get<std::size_t>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    Model model(cfg);
    const auto& n = doc.at("normalization");
    auto& norm = model.normalization();
    norm.cell_mean = n.at("cell_mean").get<std::vector<double>>();
    norm.cell_std = n.at("cell_std").get<std::vector<double>>();
    norm.tissue_mean = n.at("tissue_mean").get<std::vector<double>>();
    norm.tissue_std = n.at("tissue_std").get<std::vector<double>>();
    auto params = model.parameters();
    const auto& stored = doc.at("params");
    if (stored.size() != params.size()) throw ParseError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& s = stored[i];
      if (s.at("name").get<std::string>() != params[i].name) {
        throw ParseError("checkpoint: expected parameter " + params[i].name);
      }
      const auto shape = s.at("shape").get<std::vector<std::size_t>>();
      auto data = s.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != params[i].tensor->rows() || shape[1] != params[i].tensor->cols() ||
          data.size() != params[i].tensor->size()) {
        throw ParseError("checkpoint: shape mismatch for " + params[i].name);
      }
      params[i].tensor->data = std::move(data);
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace hact
