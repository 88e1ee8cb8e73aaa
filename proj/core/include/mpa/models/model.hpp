#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mpa/criterion.hpp"
#include "mpa/rng.hpp"
#include "mpa/tensor/checkpoint.hpp"
#include "mpa/tensor/ops.hpp"

namespace mpa::models {

using tensor::Mode;
using tensor::Tensor;

enum class ModelKind { si_convnet, joint_embed, dist_mat, pc_baseline };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::si_convnet, ModelKind::joint_embed,
                                               ModelKind::dist_mat, ModelKind::pc_baseline};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Chunked models consume aligned contour/score sequences; dist_mat consumes
// a square distance matrix.
inline bool is_chunked(ModelKind kind) { return kind != ModelKind::dist_mat; }

struct ModelSpec {
  ModelKind kind = ModelKind::si_convnet;
  double chunk_seconds = 10.0;
  std::size_t matrix_resolution = 600;
  Criterion criterion = Criterion::note_accuracy;
  std::uint64_t seed = 0;
  // Spatial grid the distance-matrix features are averaged to before the
  // classifier. 11x11 keeps the classifier size independent of resolution.
  std::size_t pooled_grid = 11;
};

// Encoder geometry shared by the 1-D models.
inline constexpr std::size_t kEncoderKernel = 7;
inline constexpr std::size_t kEncoderWidths[] = {4, 8, 16, 16};
inline constexpr std::size_t kEncoderReceptiveField = 1 + 4 * (kEncoderKernel - 1);

// Distance-matrix network geometry.
inline constexpr std::size_t kMatrixChannels = 4;
inline constexpr std::size_t kMatrixPool = 3;
inline constexpr std::size_t kResidualBlocks = 3;
inline constexpr std::size_t kClassifierWidth = 128;
inline constexpr double kMatrixDropout = 0.2;

std::size_t chunk_length(const ModelSpec& spec);
std::size_t min_matrix_resolution(std::size_t pooled_grid);

// Throws std::invalid_argument when the spec cannot be built.
void validate_spec(const ModelSpec& spec);

template <typename T>
struct ModelInput {
  Tensor<T> contour;  // [B, 1, N]
  Tensor<T> score;    // [B, 1, N]
  Tensor<T> stacked;  // [B, 2, N]: channel 0 contour, channel 1 aligned score
  Tensor<T> matrix;   // [B, 1, S, S]
};

template <typename T>
struct NamedParameter {
  std::string path;
  Tensor<T> tensor;
};

template <typename T>
struct NamedBuffer {
  std::string path;
  std::vector<T>* values;
};

// Parameters and buffers registered by the layers of one model.
template <typename T>
class ParameterSet {
 public:
  Tensor<T> add(std::string path, tensor::Shape shape, std::vector<T> values);
  void add_buffer(std::string path, std::vector<T>* values);

  const std::vector<NamedParameter<T>>& parameters() const { return params_; }
  const std::vector<NamedBuffer<T>>& buffers() const { return buffers_; }

 private:
  std::vector<NamedParameter<T>> params_;
  std::vector<NamedBuffer<T>> buffers_;
};

// Flat copy of every parameter and buffer value.
template <typename T>
using ModelState = std::vector<std::vector<T>>;

template <typename T>
class Model {
 public:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }

  // Returns one rating per batch item, shape [B].
  virtual Tensor<T> forward(const ModelInput<T>& input, Mode mode, Rng& rng) = 0;

  const std::vector<NamedParameter<T>>& parameters() const { return params_.parameters(); }
  std::vector<Tensor<T>> parameter_tensors() const;
  std::size_t parameter_count() const;
  void zero_grad();

  ModelState<T> state() const;
  void load_state(const ModelState<T>& state);

  tensor::Checkpoint to_checkpoint() const;
  // Rejects checkpoints whose entries do not match this model one-to-one.
  void load_checkpoint(const tensor::Checkpoint& checkpoint);

 protected:
  ParameterSet<T> params_;

 private:
  ModelSpec spec_;
};

template <typename T>
std::unique_ptr<Model<T>> build_model(const ModelSpec& spec);

template <typename T>
std::size_t count_parameters(const Model<T>& model) {
  return model.parameter_count();
}

// Reference parameter counts reported for the original architectures; the
// three 1-D/2-D stacks here are sized to land close to them.
inline constexpr std::size_t kReferenceParameterCount[] = {3089, 6144, 63417, 0};

// Key-value manifest stored next to each checkpoint.
struct ModelManifest {
  ModelSpec spec;
  std::size_t parameter_count = 0;
  std::uint32_t value_bytes = 4;
  std::uint32_t format_version = tensor::kCheckpointVersion;
};

void write_model_manifest(const std::filesystem::path& file, const ModelManifest& manifest);
ModelManifest read_model_manifest(const std::filesystem::path& file);

template <typename T>
void save_model(const Model<T>& model, const std::filesystem::path& checkpoint_file);

// Reads `<checkpoint>.manifest`, builds the recorded architecture and loads
// the weights.
template <typename T>
std::unique_ptr<Model<T>> load_model(const std::filesystem::path& checkpoint_file);

std::filesystem::path manifest_path_for(const std::filesystem::path& checkpoint_file);

}  // namespace mpa::models
