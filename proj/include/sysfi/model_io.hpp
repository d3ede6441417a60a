#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sysfi/model.hpp"

namespace sysfi {

/// Malformed or inconsistent model/dataset container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledImage {
  int label = 0;
  TensorI8 image;
  friend bool operator==(const LabeledImage&, const LabeledImage&) = default;
};

struct Dataset {
  std::vector<LabeledImage> images;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr int kModelFormatVersion = 1;

/// Parses and eagerly validates a model container.
ModelSpec model_from_json(std::string_view text);
/// Canonical form: two-space indented JSON with a fixed key order.
std::string model_to_json(const ModelSpec& model);

ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& model, const std::filesystem::path& path);

Dataset dataset_from_json(std::string_view text);
std::string dataset_to_json(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

enum class FixtureKind { Fc3, LenetLike, LenetLikeRgb };

FixtureKind parse_fixture_kind(std::string_view name);  // "fc3" | "lenet-like" | "lenet-like-rgb"
std::string_view fixture_name(FixtureKind kind);

struct Fixture {
  ModelSpec model;
  Dataset dataset;
};

inline constexpr int kFixtureImages = 16;

/// Deterministic synthetic model and dataset.
///
/// fc3: [1,28,28] -> 128 -> 64 -> 10, ReLU between layers.
/// lenet-like: [1,28,28] -> conv 6@5x5 pad 2, ReLU, pool -> conv 16@5x5,
/// ReLU, pool -> 120 -> 84 -> 10.
/// lenet-like-rgb: the same on [3,32,32] without padding in the first conv.
///
/// Weights are uniform in [-24, 24]; each layer's shift is calibrated on the
/// fixture images so that the 99th percentile of |accumulator| maps to
/// about 96 after rounding. Images are sparse random strokes. Labels are
/// the model's own fault-free prediction.
Fixture gen_fixture(FixtureKind kind, std::uint64_t seed);

}  // namespace sysfi
