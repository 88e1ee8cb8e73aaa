#include "mpa/models/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mpa/signal/pitch.hpp"
#include "mpa/signal/text_formats.hpp"

namespace mpa::models {

using tensor::Shape;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::si_convnet: return "si_convnet";
    case ModelKind::joint_embed: return "joint_embed";
    case ModelKind::dist_mat: return "dist_mat";
    case ModelKind::pc_baseline: return "pc_baseline";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : kAllModelKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown model kind '" + std::string(name) +
                              "' (expected si_convnet, joint_embed, dist_mat or pc_baseline)");
}

std::size_t chunk_length(const ModelSpec& spec) { return signal::chunk_frames(spec.chunk_seconds); }

std::size_t min_matrix_resolution(std::size_t pooled_grid) {
  std::size_t s = pooled_grid;
  for (std::size_t i = 0; i < kResidualBlocks; ++i) s *= kMatrixPool;
  return s;
}

void validate_spec(const ModelSpec& spec) {
  if (is_chunked(spec.kind)) {
    if (!(spec.chunk_seconds > 0.0)) throw std::invalid_argument("chunk_seconds must be positive");
    const auto n = chunk_length(spec);
    if (n < kEncoderReceptiveField) {
      throw std::invalid_argument("chunk of " + std::to_string(n) +
                                  " frames is shorter than the encoder receptive field (" +
                                  std::to_string(kEncoderReceptiveField) + ")");
    }
  } else {
    if (spec.pooled_grid == 0) throw std::invalid_argument("pooled_grid must be positive");
    const auto min_s = min_matrix_resolution(spec.pooled_grid);
    if (spec.matrix_resolution < min_s) {
      throw std::invalid_argument("matrix resolution " + std::to_string(spec.matrix_resolution) +
                                  " leaves less than a " + std::to_string(spec.pooled_grid) +
                                  "-cell grid after three 3x3 pools (minimum " +
                                  std::to_string(min_s) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// ParameterSet / Model

template <typename T>
Tensor<T> ParameterSet<T>::add(std::string path, Shape shape, std::vector<T> values) {
  auto t = Tensor<T>::from_values(std::move(shape), std::move(values), true);
  params_.push_back({std::move(path), t});
  return t;
}

template <typename T>
void ParameterSet<T>::add_buffer(std::string path, std::vector<T>* values) {
  buffers_.push_back({std::move(path), values});
}

template <typename T>
std::vector<Tensor<T>> Model<T>::parameter_tensors() const {
  std::vector<Tensor<T>> out;
  for (const auto& p : params_.parameters()) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_.parameters()) n += p.tensor.numel();
  return n;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto p : params_.parameters()) p.tensor.zero_grad();
}

template <typename T>
ModelState<T> Model<T>::state() const {
  ModelState<T> s;
  for (const auto& p : params_.parameters()) {
    const auto v = p.tensor.values();
    s.emplace_back(v.begin(), v.end());
  }
  for (const auto& b : params_.buffers()) s.push_back(*b.values);
  return s;
}

template <typename T>
void Model<T>::load_state(const ModelState<T>& s) {
  const auto& ps = params_.parameters();
  const auto& bs = params_.buffers();
  if (s.size() != ps.size() + bs.size()) throw std::invalid_argument("model state size mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto dst = Tensor<T>(ps[i].tensor).mutable_values();
    if (dst.size() != s[i].size()) throw std::invalid_argument("model state shape mismatch");
    std::copy(s[i].begin(), s[i].end(), dst.begin());
  }
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (bs[i].values->size() != s[ps.size() + i].size()) {
      throw std::invalid_argument("model state buffer mismatch");
    }
    *bs[i].values = s[ps.size() + i];
  }
}

template <typename T>
tensor::Checkpoint Model<T>::to_checkpoint() const {
  tensor::Checkpoint ck;
  ck.value_bytes = sizeof(T);
  for (const auto& p : params_.parameters()) {
    const auto v = p.tensor.values();
    ck.entries.push_back({p.path, tensor::EntryKind::parameter, p.tensor.shape(),
                          std::vector<double>(v.begin(), v.end())});
  }
  for (const auto& b : params_.buffers()) {
    ck.entries.push_back({b.path, tensor::EntryKind::buffer, Shape{b.values->size()},
                          std::vector<double>(b.values->begin(), b.values->end())});
  }
  return ck;
}

template <typename T>
void Model<T>::load_checkpoint(const tensor::Checkpoint& ck) {
  const auto& ps = params_.parameters();
  const auto& bs = params_.buffers();
  if (ck.entries.size() != ps.size() + bs.size()) {
    throw tensor::CheckpointError("checkpoint has " + std::to_string(ck.entries.size()) +
                                  " entries, " + std::string(to_string(spec_.kind)) + " expects " +
                                  std::to_string(ps.size() + bs.size()));
  }
  for (const auto& p : ps) {
    const auto* e = ck.find(p.path);
    if (!e || e->kind != tensor::EntryKind::parameter || e->shape != p.tensor.shape()) {
      throw tensor::CheckpointError("checkpoint does not match parameter " + p.path + " " +
                                    tensor::shape_string(p.tensor.shape()));
    }
    auto dst = Tensor<T>(p.tensor).mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(e->values[i]);
  }
  for (const auto& b : bs) {
    const auto* e = ck.find(b.path);
    if (!e || e->kind != tensor::EntryKind::buffer || e->values.size() != b.values->size()) {
      throw tensor::CheckpointError("checkpoint does not match buffer " + b.path);
    }
    for (std::size_t i = 0; i < e->values.size(); ++i) (*b.values)[i] = static_cast<T>(e->values[i]);
  }
}

// ---------------------------------------------------------------------------
// Layers

namespace {

template <typename T>
std::vector<T> uniform_init(std::size_t count, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(count);
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return v;
}

template <typename T>
struct Conv1dLayer {
  Tensor<T> weight, bias;
  std::size_t padding = 0;

  Conv1dLayer(ParameterSet<T>& ps, const std::string& prefix, std::size_t in, std::size_t out,
              std::size_t kernel, Rng& rng)
      : padding((kernel - 1) / 2) {
    const std::size_t fan_in = in * kernel;
    weight = ps.add(prefix + ".weight", {out, in, kernel}, uniform_init<T>(out * in * kernel, fan_in, rng));
    bias = ps.add(prefix + ".bias", {out}, uniform_init<T>(out, fan_in, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return tensor::conv1d(x, weight, bias, 1, padding); }
};

template <typename T>
struct BatchNorm1dLayer {
  Tensor<T> gamma, beta;
  std::unique_ptr<tensor::BatchNormState<T>> stats;

  BatchNorm1dLayer(ParameterSet<T>& ps, const std::string& prefix, std::size_t channels)
      : stats(std::make_unique<tensor::BatchNormState<T>>(channels)) {
    gamma = ps.add(prefix + ".gamma", {channels}, std::vector<T>(channels, T{1}));
    beta = ps.add(prefix + ".beta", {channels}, std::vector<T>(channels, T{0}));
    ps.add_buffer(prefix + ".running_mean", &stats->running_mean);
    ps.add_buffer(prefix + ".running_var", &stats->running_var);
  }

  Tensor<T> operator()(const Tensor<T>& x, Mode mode) const {
    return tensor::batchnorm1d(x, gamma, beta, *stats, mode);
  }
};

template <typename T>
struct LinearLayer {
  Tensor<T> weight, bias;

  LinearLayer(ParameterSet<T>& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
    weight = ps.add(prefix + ".weight", {out, in}, uniform_init<T>(out * in, in, rng));
    bias = ps.add(prefix + ".bias", {out}, uniform_init<T>(out, in, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return tensor::linear(x, weight, bias); }
};

template <typename T>
struct Conv2dLayer {
  Tensor<T> weight, bias;

  Conv2dLayer(ParameterSet<T>& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
    const std::size_t fan_in = in * 9;
    weight = ps.add(prefix + ".weight", {out, in, 3, 3}, uniform_init<T>(out * in * 9, fan_in, rng));
    bias = ps.add(prefix + ".bias", {out}, uniform_init<T>(out, fan_in, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return tensor::conv2d(x, weight, bias, 1, 1); }
};

// conv1d -> batchnorm1d -> ReLU, x4, then mean over time.
template <typename T>
class Encoder1d {
 public:
  Encoder1d(ParameterSet<T>& ps, const std::string& prefix, std::size_t in_channels, Rng& rng) {
    std::size_t in = in_channels;
    for (std::size_t i = 0; i < std::size(kEncoderWidths); ++i) {
      const std::string p = prefix + ".block" + std::to_string(i);
      convs_.emplace_back(ps, p + ".conv", in, kEncoderWidths[i], kEncoderKernel, rng);
      norms_.emplace_back(ps, p + ".bn", kEncoderWidths[i]);
      in = kEncoderWidths[i];
    }
  }

  static constexpr std::size_t width() { return kEncoderWidths[std::size(kEncoderWidths) - 1]; }

  // [B, C_in, N] -> [B, 16]
  Tensor<T> operator()(Tensor<T> x, Mode mode) const {
    for (std::size_t i = 0; i < convs_.size(); ++i) x = tensor::relu(norms_[i](convs_[i](x), mode));
    return tensor::temporal_mean(x);
  }

 private:
  std::vector<Conv1dLayer<T>> convs_;
  std::vector<BatchNorm1dLayer<T>> norms_;
};

template <typename T>
void require(const Tensor<T>& t, std::size_t rank, const char* what, const char* model) {
  if (!t.defined() || t.rank() != rank) {
    throw tensor::ShapeError(std::string(model) + ": input '" + what + "' missing or wrong rank");
  }
}

template <typename T>
Tensor<T> flatten_batch(const Tensor<T>& x) {
  return tensor::reshape(x, {x.dim(0)});
}

// Score-informed CNN on stacked contour/score channels; with one input
// channel it is the score-independent baseline.
template <typename T>
class SequenceRegressor final : public Model<T> {
 public:
  SequenceRegressor(const ModelSpec& spec, std::size_t in_channels, Rng& rng)
      : Model<T>(spec),
        in_channels_(in_channels),
        encoder_(this->params_, "encoder", in_channels, rng),
        head_(this->params_, "head", Encoder1d<T>::width(), 1, rng) {}

  Tensor<T> forward(const ModelInput<T>& input, Mode mode, Rng&) override {
    const Tensor<T>& x = in_channels_ == 2 ? input.stacked : input.contour;
    const char* name = in_channels_ == 2 ? "si_convnet" : "pc_baseline";
    require(x, 3, in_channels_ == 2 ? "stacked" : "contour", name);
    if (x.dim(1) != in_channels_) throw tensor::ShapeError(std::string(name) + ": wrong channel count");
    auto features = encoder_(x, mode);
    return flatten_batch(tensor::leaky_relu(head_(features)));
  }

 private:
  std::size_t in_channels_;
  Encoder1d<T> encoder_;
  LinearLayer<T> head_;
};

template <typename T>
class JointEmbedNet final : public Model<T> {
 public:
  JointEmbedNet(const ModelSpec& spec, Rng& rng)
      : Model<T>(spec),
        performance_(this->params_, "performance_encoder", 1, rng),
        score_(this->params_, "score_encoder", 1, rng) {}

  Tensor<T> forward(const ModelInput<T>& input, Mode mode, Rng&) override {
    require(input.contour, 3, "contour", "joint_embed");
    require(input.score, 3, "score", "joint_embed");
    auto e_perf = performance_(input.contour, mode);
    auto e_score = score_(input.score, mode);
    return tensor::cosine_similarity(e_score, e_perf);
  }

 private:
  Encoder1d<T> performance_;
  Encoder1d<T> score_;
};

template <typename T>
class DistMatNet final : public Model<T> {
 public:
  DistMatNet(const ModelSpec& spec, Rng& rng)
      : Model<T>(spec),
        stem_(this->params_, "stem", 1, kMatrixChannels, rng),
        classifier_in_(this->params_, "classifier.0",
                       kMatrixChannels * spec.pooled_grid * spec.pooled_grid, kClassifierWidth, rng),
        classifier_out_(this->params_, "classifier.1", kClassifierWidth, 1, rng) {
    for (std::size_t i = 0; i < kResidualBlocks; ++i) {
      const std::string p = "residual" + std::to_string(i);
      first_.emplace_back(this->params_, p + ".conv0", kMatrixChannels, kMatrixChannels, rng);
      second_.emplace_back(this->params_, p + ".conv1", kMatrixChannels, kMatrixChannels, rng);
    }
  }

  Tensor<T> forward(const ModelInput<T>& input, Mode mode, Rng& rng) override {
    require(input.matrix, 4, "matrix", "dist_mat");
    const auto& spec = this->spec();
    if (input.matrix.dim(1) != 1 || input.matrix.dim(2) != spec.matrix_resolution ||
        input.matrix.dim(3) != spec.matrix_resolution) {
      throw tensor::ShapeError("dist_mat: expected [B, 1, " + std::to_string(spec.matrix_resolution) +
                               ", " + std::to_string(spec.matrix_resolution) + "] input, got " +
                               tensor::shape_string(input.matrix.shape()));
    }
    auto x = tensor::relu(stem_(input.matrix));
    for (std::size_t i = 0; i < kResidualBlocks; ++i) {
      auto y = second_[i](tensor::relu(first_[i](x)));
      x = tensor::relu(tensor::add(x, y));
      x = tensor::maxpool2d(x, kMatrixPool);
      x = tensor::dropout(x, kMatrixDropout, mode, rng);
    }
    x = tensor::adaptive_avg_pool2d(x, spec.pooled_grid, spec.pooled_grid);
    x = tensor::reshape(x, {x.dim(0), x.numel() / x.dim(0)});
    x = tensor::relu(classifier_in_(x));
    x = tensor::dropout(x, kMatrixDropout, mode, rng);
    return flatten_batch(classifier_out_(x));
  }

 private:
  Conv2dLayer<T> stem_;
  std::vector<Conv2dLayer<T>> first_;
  std::vector<Conv2dLayer<T>> second_;
  LinearLayer<T> classifier_in_;
  LinearLayer<T> classifier_out_;
};

}  // namespace

template <typename T>
std::unique_ptr<Model<T>> build_model(const ModelSpec& spec) {
  validate_spec(spec);
  Rng rng = make_rng(spec.seed, streams::init);
  switch (spec.kind) {
    case ModelKind::si_convnet: return std::make_unique<SequenceRegressor<T>>(spec, 2, rng);
    case ModelKind::pc_baseline: return std::make_unique<SequenceRegressor<T>>(spec, 1, rng);
    case ModelKind::joint_embed: return std::make_unique<JointEmbedNet<T>>(spec, rng);
    case ModelKind::dist_mat: return std::make_unique<DistMatNet<T>>(spec, rng);
  }
  throw std::invalid_argument("unknown model kind");
}

// ---------------------------------------------------------------------------
// Manifest and persistence

std::filesystem::path manifest_path_for(const std::filesystem::path& checkpoint_file) {
  auto p = checkpoint_file;
  p += ".manifest";
  return p;
}

void write_model_manifest(const std::filesystem::path& file, const ModelManifest& m) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << "kind=" << to_string(m.spec.kind) << '\n'
     << "criterion=" << to_string(m.spec.criterion) << '\n'
     << "chunk_seconds=" << signal::format_real(m.spec.chunk_seconds) << '\n'
     << "matrix_resolution=" << m.spec.matrix_resolution << '\n'
     << "pooled_grid=" << m.spec.pooled_grid << '\n'
     << "seed=" << m.spec.seed << '\n'
     << "parameter_count=" << m.parameter_count << '\n'
     << "value_bytes=" << m.value_bytes << '\n'
     << "format_version=" << m.format_version << '\n';
  if (!os) throw std::runtime_error("write failed for " + file.string());
}

ModelManifest read_model_manifest(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open model manifest " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(file.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(file.string() + ": missing key '" + key + "'");
    return it->second;
  };
  ModelManifest m;
  m.spec.kind = parse_model_kind(need("kind"));
  m.spec.criterion = parse_criterion(need("criterion"));
  m.spec.chunk_seconds = signal::parse_real(need("chunk_seconds"), file.string());
  m.spec.matrix_resolution = std::stoul(need("matrix_resolution"));
  m.spec.pooled_grid = std::stoul(need("pooled_grid"));
  m.spec.seed = std::stoull(need("seed"));
  m.parameter_count = std::stoul(need("parameter_count"));
  m.value_bytes = static_cast<std::uint32_t>(std::stoul(need("value_bytes")));
  m.format_version = static_cast<std::uint32_t>(std::stoul(need("format_version")));
  return m;
}

template <typename T>
void save_model(const Model<T>& model, const std::filesystem::path& checkpoint_file) {
  tensor::save_checkpoint(checkpoint_file, model.to_checkpoint());
  ModelManifest m;
  m.spec = model.spec();
  m.parameter_count = model.parameter_count();
  m.value_bytes = sizeof(T);
  write_model_manifest(manifest_path_for(checkpoint_file), m);
}

template <typename T>
std::unique_ptr<Model<T>> load_model(const std::filesystem::path& checkpoint_file) {
  const auto manifest = read_model_manifest(manifest_path_for(checkpoint_file));
  const auto ck = tensor::load_checkpoint(checkpoint_file);
  if (ck.format_version != manifest.format_version) {
    throw tensor::CheckpointError("checkpoint/manifest format version mismatch");
  }
  auto model = build_model<T>(manifest.spec);
  model->load_checkpoint(ck);
  if (model->parameter_count() != manifest.parameter_count) {
    throw tensor::CheckpointError("manifest parameter count does not match " +
                                  std::string(to_string(manifest.spec.kind)));
  }
  return model;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Model<float>;
template class Model<double>;
template std::unique_ptr<Model<float>> build_model<float>(const ModelSpec&);
template std::unique_ptr<Model<double>> build_model<double>(const ModelSpec&);
template void save_model<float>(const Model<float>&, const std::filesystem::path&);
template void save_model<double>(const Model<double>&, const std::filesystem::path&);
template std::unique_ptr<Model<float>> load_model<float>(const std::filesystem::path&);
template std::unique_ptr<Model<double>> load_model<double>(const std::filesystem::path&);

}  // namespace mpa::models
