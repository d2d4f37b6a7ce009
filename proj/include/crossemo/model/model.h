// include/crossemo/model/model.h

// Copyright 2026  The crossemo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSEMO_MODEL_MODEL_H_
#define CROSSEMO_MODEL_MODEL_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crossemo/base/util.h"
#include "crossemo/model/autodiff.h"

namespace crossemo {

struct ConvSpec {
  int channels = 32;
  int kernel = 3;
  bool pool = false;  // 2x2 max pool after the activation
};

struct CnnRnnAttConfig {
  std::vector<ConvSpec> conv = {{32, 3, false}, {32, 3, true},  {64, 3, false},
                                {64, 3, true},  {128, 3, false}, {128, 3, true}};
  int rnn_layers = 1;
  int rnn_hidden = 512;
  std::vector<int> fc = {512, 512, 256, 128};
  double dropout = 0.2;
  int attention_dim = 128;
};

struct BlstmAttSimConfig {
  int layers = 2;
  int hidden = 512;
  int attention_dim = 128;
};

enum class Arch { kCnnRnnAtt, kBlstmAttSim };

std::string_view ArchName(Arch arch);

struct ModelConfig {
  Arch arch = Arch::kCnnRnnAtt;
  int n_bands = 23;
  int n_classes = 4;
  CnnRnnAttConfig cnn;
  BlstmAttSimConfig blstm;

  static ModelConfig PaperDefault(Arch arch);
  /// Small variant for CPU runs: 2 conv layers, BLSTM 32, FC [32, 16].
  static ModelConfig DeskScale(Arch arch);

  /// Throws BadConfig naming the offending field.
  void Validate() const;
  Json ToJson() const;
  static ModelConfig FromJson(const Json &j);
  std::string Digest() const { return JsonDigest(ToJson()); }
};

struct CheckpointHeader {
  std::string arch;
  std::string digest;
  int epoch = 0;
  Json model_config;
  Json meta;
};

/// A built architecture: named parameters, batch-norm running statistics
/// and a forward pass. Float for training, double for gradient checks.
template <typename T>
class Model {
 public:
  Model(const ModelConfig &config, uint64_t seed);

  const ModelConfig &config() const { return config_; }
  const std::vector<std::pair<std::string, ad::Var<T>>> &parameters() const { return params_; }
  std::vector<std::pair<std::string, ad::BatchNormState<T>>> &batchnorm_states() { return bn_; }
  size_t ParameterCount() const;
  /// One line per parameter tensor plus a total.
  std::string ParameterReport() const;

  /// features: batch * frames * bands values (row-major). Returns logits
  /// [batch, n_classes]. Train mode enables dropout (mask derived from
  /// dropout_seed) and batch statistics.
  ad::Var<T> Forward(const std::vector<T> &features, int batch, int frames, bool train,
                     uint64_t dropout_seed = 0, std::vector<T> *attention = nullptr);

  void ZeroGrad();

  void SaveCheckpoint(const std::filesystem::path &path, int epoch, const Json &meta = Json::object()) const;
  /// Throws CheckpointMismatch on architecture or config-digest mismatch.
  CheckpointHeader LoadCheckpoint(const std::filesystem::path &path);

 private:
  ad::Var<T> AddParam(const std::string &name, ad::Shape shape, double fan_in, double fan_out,
                      Rng &rng);
  ad::Var<T> AddZeros(const std::string &name, ad::Shape shape, T fill = T(0));
  ad::BatchNormState<T> *AddBatchNorm(const std::string &name, int features);
  ad::Var<T> Param(const std::string &name) const;
  ad::BatchNormState<T> *State(const std::string &name);

  ModelConfig config_;
  std::vector<std::pair<std::string, ad::Var<T>>> params_;
  std::vector<std::pair<std::string, ad::BatchNormState<T>>> bn_;
};

extern template class Model<float>;
extern template class Model<double>;

CheckpointHeader ReadCheckpointHeader(const std::filesystem::path &path);

}  // namespace crossemo

#endif  // CROSSEMO_MODEL_MODEL_H_
