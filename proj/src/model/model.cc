// src/model/model.cc

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

#include "crossemo/model/model.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "crossemo/base/error.h"

namespace crossemo {

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'E', 'M', 'K'};
constexpr uint32_t kCheckpointVersion = 1;

void Bad(const std::string &field, const std::string &why) {
  throw Error(ErrorCode::kBadConfig, "model config field '" + field + "' " + why);
}

class Writer {
 public:
  template <typename V>
  void Pod(V v) {
    out_.append(reinterpret_cast<const char *>(&v), sizeof(v));
  }
  void Str(const std::string &s) {
    Pod(static_cast<uint32_t>(s.size()));
    out_ += s;
  }
  void Floats(const std::vector<float> &v) {
    out_.append(reinterpret_cast<const char *>(v.data()), v.size() * sizeof(float));
  }
  const std::string &data() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <typename V>
  V Pod() {
    Need(sizeof(V));
    V v;
    std::memcpy(&v, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::string Str() {
    const auto n = Pod<uint32_t>();
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<float> Floats(size_t n) {
    Need(n * sizeof(float));
    std::vector<float> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return v;
  }

 private:
  void Need(size_t n) const {
    if (pos_ + n > data_.size())
      throw Error(ErrorCode::kCheckpointMismatch, "checkpoint is truncated");
  }
  std::string data_;
  size_t pos_ = 0;
};

CheckpointHeader ReadHeader(Reader &r) {
  char magic[4];
  for (char &c : magic) c = r.Pod<char>();
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw Error(ErrorCode::kCheckpointMismatch, "not a checkpoint file");
  const auto version = r.Pod<uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::kCheckpointMismatch,
                "unsupported checkpoint version " + std::to_string(version));
  CheckpointHeader h;
  h.arch = r.Str();
  h.digest = r.Str();
  h.epoch = r.Pod<int32_t>();
  h.model_config = Json::parse(r.Str());
  h.meta = Json::parse(r.Str());
  return h;
}

int PooledWidth(int w) { return w >= 2 ? w / 2 : 1; }

}  // namespace

std::string_view ArchName(Arch arch) {
  return arch == Arch::kCnnRnnAtt ? "cnnrnnatt" : "blstmattsim";
}

ModelConfig ModelConfig::PaperDefault(Arch arch) {
  ModelConfig c;
  c.arch = arch;
  return c;
}

ModelConfig ModelConfig::DeskScale(Arch arch) {
  ModelConfig c;
  c.arch = arch;
  c.cnn.conv = {{8, 3, true}, {16, 3, true}};
  c.cnn.rnn_hidden = 32;
  c.cnn.fc = {32, 16};
  c.cnn.attention_dim = 16;
  c.blstm.hidden = 32;
  c.blstm.attention_dim = 16;
  return c;
}

void ModelConfig::Validate() const {
  if (n_bands < 1) Bad("n_bands", "must be >= 1");
  if (n_classes < 2) Bad("n_classes", "must be >= 2");
  if (arch == Arch::kCnnRnnAtt) {
    if (cnn.conv.empty()) Bad("cnn.conv", "must list at least one layer");
    for (size_t i = 0; i < cnn.conv.size(); ++i) {
      if (cnn.conv[i].channels < 1) Bad("cnn.conv[" + std::to_string(i) + "].channels", "must be >= 1");
      if (cnn.conv[i].kernel < 1 || cnn.conv[i].kernel % 2 == 0)
        Bad("cnn.conv[" + std::to_string(i) + "].kernel", "must be odd and >= 1");
    }
    if (cnn.rnn_layers < 1) Bad("cnn.rnn_layers", "must be >= 1");
    if (cnn.rnn_hidden < 1) Bad("cnn.rnn_hidden", "must be >= 1");
    if (cnn.fc.empty()) Bad("cnn.fc", "must list at least one layer");
    for (int f : cnn.fc) {
      if (f < 1) Bad("cnn.fc", "sizes must be >= 1");
    }
    if (!(cnn.dropout >= 0.0 && cnn.dropout < 1.0)) Bad("cnn.dropout", "must lie in [0, 1)");
    if (cnn.attention_dim < 1) Bad("cnn.attention_dim", "must be >= 1");
  } else {
    if (blstm.layers < 1) Bad("blstm.layers", "must be >= 1");
    if (blstm.hidden < 1) Bad("blstm.hidden", "must be >= 1");
    if (blstm.attention_dim < 1) Bad("blstm.attention_dim", "must be >= 1");
  }
}

Json ModelConfig::ToJson() const {
  Json j{{"arch", std::string(ArchName(arch))}, {"n_bands", n_bands}, {"n_classes", n_classes}};
  if (arch == Arch::kCnnRnnAtt) {
    Json conv = Json::array();
    for (const auto &c : cnn.conv)
      conv.push_back({{"channels", c.channels}, {"kernel", c.kernel}, {"pool", c.pool}});
    j["cnn"] = {{"conv", conv},
                {"rnn_layers", cnn.rnn_layers},
                {"rnn_hidden", cnn.rnn_hidden},
                {"fc", cnn.fc},
                {"dropout", cnn.dropout},
                {"attention_dim", cnn.attention_dim}};
  } else {
    j["blstm"] = {{"layers", blstm.layers},
                  {"hidden", blstm.hidden},
                  {"attention_dim", blstm.attention_dim}};
  }
  return j;
}

ModelConfig ModelConfig::FromJson(const Json &j) {
  if (!j.is_object()) throw Error(ErrorCode::kBadConfig, "model config must be an object");
  const std::string arch = j.value("arch", std::string("cnnrnnatt"));
  ModelConfig c;
  if (arch == "cnnrnnatt") {
    c.arch = Arch::kCnnRnnAtt;
  } else if (arch == "blstmattsim") {
    c.arch = Arch::kBlstmAttSim;
  } else {
    Bad("arch", "must be cnnrnnatt or blstmattsim, got '" + arch + "'");
  }
  try {
    c.n_bands = j.value("n_bands", c.n_bands);
    c.n_classes = j.value("n_classes", c.n_classes);
    if (j.contains("cnn")) {
      const Json &k = j["cnn"];
      if (k.contains("conv")) {
        c.cnn.conv.clear();
        for (const auto &s : k["conv"])
          c.cnn.conv.push_back({s.value("channels", 32), s.value("kernel", 3), s.value("pool", false)});
      }
      c.cnn.rnn_layers = k.value("rnn_layers", c.cnn.rnn_layers);
      c.cnn.rnn_hidden = k.value("rnn_hidden", c.cnn.rnn_hidden);
      if (k.contains("fc")) c.cnn.fc = k["fc"].get<std::vector<int>>();
      c.cnn.dropout = k.value("dropout", c.cnn.dropout);
      c.cnn.attention_dim = k.value("attention_dim", c.cnn.attention_dim);
    }
    if (j.contains("blstm")) {
      const Json &k = j["blstm"];
      c.blstm.layers = k.value("layers", c.blstm.layers);
      c.blstm.hidden = k.value("hidden", c.blstm.hidden);
      c.blstm.attention_dim = k.value("attention_dim", c.blstm.attention_dim);
    }
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kBadConfig, std::string("model config: ") + e.what());
  }
  c.Validate();
  return c;
}

template <typename T>
Model<T>::Model(const ModelConfig &config, uint64_t seed) : config_(config) {
  config_.Validate();
  Rng rng(seed);
  auto add_lstm = [&](const std::string &prefix, int in, int hidden) {
    for (const char *dir : {"fw", "bw"}) {
      const std::string p = prefix + "." + dir;
      AddParam(p + ".wx", {in, 4 * hidden}, in, 4 * hidden, rng);
      AddParam(p + ".wh", {hidden, 4 * hidden}, hidden, 4 * hidden, rng);
      auto b = AddZeros(p + ".b", {4 * hidden});
      for (int k = hidden; k < 2 * hidden; ++k) b->value[k] = T(1);
    }
  };
  auto add_attention = [&](int d, int a) {
    AddParam("att.w", {d, a}, d, a, rng);
    AddZeros("att.b", {a});
    AddParam("att.v", {a}, a, 1, rng);
  };

  int feat;
  if (config_.arch == Arch::kCnnRnnAtt) {
    const auto &c = config_.cnn;
    int channels = 1, width = config_.n_bands;
    for (size_t i = 0; i < c.conv.size(); ++i) {
      const int k = c.conv[i].kernel, o = c.conv[i].channels;
      const std::string p = "conv" + std::to_string(i);
      AddParam(p + ".w", {o, channels, k, k}, channels * k * k, o * k * k, rng);
      AddZeros(p + ".b", {o});
      channels = o;
      if (c.conv[i].pool) width = PooledWidth(width);
    }
    feat = channels * width;
    for (int l = 0; l < c.rnn_layers; ++l) {
      add_lstm("blstm" + std::to_string(l), feat, c.rnn_hidden);
      feat = 2 * c.rnn_hidden;
    }
    for (size_t i = 0; i < c.fc.size(); ++i) {
      const std::string p = "fc" + std::to_string(i);
      AddParam(p + ".w", {feat, c.fc[i]}, feat, c.fc[i], rng);
      AddZeros(p + ".b", {c.fc[i]});
      AddZeros(p + ".bn.gamma", {c.fc[i]}, T(1));
      AddZeros(p + ".bn.beta", {c.fc[i]});
      AddBatchNorm(p + ".bn", c.fc[i]);
      feat = c.fc[i];
    }
    add_attention(feat, c.attention_dim);
  } else {
    const auto &c = config_.blstm;
    feat = config_.n_bands;
    for (int l = 0; l < c.layers; ++l) {
      add_lstm("blstm" + std::to_string(l), feat, c.hidden);
      feat = 2 * c.hidden;
    }
    add_attention(feat, c.attention_dim);
  }
  AddParam("out.w", {feat, config_.n_classes}, feat, config_.n_classes, rng);
  AddZeros("out.b", {config_.n_classes});
}

template <typename T>
ad::Var<T> Model<T>::AddParam(const std::string &name, ad::Shape shape, double fan_in,
                              double fan_out, Rng &rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<T> v(ad::NumElements(shape));
  for (auto &x : v) x = static_cast<T>(rng.Uniform(-limit, limit));
  auto p = ad::Leaf<T>(std::move(shape), std::move(v), true);
  params_.emplace_back(name, p);
  return p;
}

template <typename T>
ad::Var<T> Model<T>::AddZeros(const std::string &name, ad::Shape shape, T fill) {
  const size_t n = ad::NumElements(shape);
  auto p = ad::Leaf<T>(std::move(shape), std::vector<T>(n, fill), true);
  params_.emplace_back(name, p);
  return p;
}

template <typename T>
ad::BatchNormState<T> *Model<T>::AddBatchNorm(const std::string &name, int features) {
  bn_.emplace_back(name, ad::BatchNormState<T>{std::vector<T>(features, T(0)),
                                               std::vector<T>(features, T(1))});
  return &bn_.back().second;
}

template <typename T>
ad::Var<T> Model<T>::Param(const std::string &name) const {
  for (const auto &[n, p] : params_) {
    if (n == name) return p;
  }
  throw Error(ErrorCode::kShapeMismatch, "model has no parameter '" + name + "'");
}

template <typename T>
ad::BatchNormState<T> *Model<T>::State(const std::string &name) {
  for (auto &[n, s] : bn_) {
    if (n == name) return &s;
  }
  throw Error(ErrorCode::kShapeMismatch, "model has no batch-norm state '" + name + "'");
}

template <typename T>
size_t Model<T>::ParameterCount() const {
  size_t n = 0;
  for (const auto &[_, p] : params_) n += p->size();
  return n;
}

template <typename T>
std::string Model<T>::ParameterReport() const {
  std::ostringstream out;
  for (const auto &[name, p] : params_)
    out << name << " " << ad::ShapeString(p->shape) << " " << p->size() << "\n";
  out << "total " << ParameterCount() << "\n";
  return out.str();
}

template <typename T>
ad::Var<T> Model<T>::Forward(const std::vector<T> &features, int batch, int frames, bool train,
                             uint64_t dropout_seed, std::vector<T> *attention) {
  const int bands = config_.n_bands;
  if (batch < 1 || frames < 1 ||
      features.size() != static_cast<size_t>(batch) * frames * bands)
    throw Error(ErrorCode::kShapeMismatch,
                "features hold " + std::to_string(features.size()) + " values, expected " +
                    std::to_string(batch) + " x " + std::to_string(frames) + " x " +
                    std::to_string(bands));
  auto blstm = [&](ad::Var<T> seq, const std::string &prefix) {
    auto fw = ad::Lstm(seq, Param(prefix + ".fw.wx"), Param(prefix + ".fw.wh"),
                       Param(prefix + ".fw.b"), false);
    auto bw = ad::Lstm(seq, Param(prefix + ".bw.wx"), Param(prefix + ".bw.wh"),
                       Param(prefix + ".bw.b"), true);
    return ad::ConcatLast(fw, bw);
  };

  ad::Var<T> seq;
  if (config_.arch == Arch::kCnnRnnAtt) {
    const auto &c = config_.cnn;
    auto x = ad::Leaf<T>({batch, 1, frames, bands}, features);
    for (size_t i = 0; i < c.conv.size(); ++i) {
      const std::string p = "conv" + std::to_string(i);
      x = ad::Relu(ad::Conv2d(x, Param(p + ".w"), Param(p + ".b")));
      if (c.conv[i].pool) x = ad::MaxPool2d(x);
    }
    seq = ad::ConvToSequence(x);
    for (int l = 0; l < c.rnn_layers; ++l) seq = blstm(seq, "blstm" + std::to_string(l));
    for (size_t i = 0; i < c.fc.size(); ++i) {
      const std::string p = "fc" + std::to_string(i);
      seq = ad::Dense(seq, Param(p + ".w"), Param(p + ".b"));
      seq = ad::BatchNorm(seq, Param(p + ".bn.gamma"), Param(p + ".bn.beta"), State(p + ".bn"),
                          train);
      seq = ad::Relu(seq);
      seq = ad::Dropout(seq, c.dropout, train, Mix64(dropout_seed ^ Mix64(i + 1)));
    }
  } else {
    seq = ad::Leaf<T>({batch, frames, bands}, features);
    for (int l = 0; l < config_.blstm.layers; ++l) seq = blstm(seq, "blstm" + std::to_string(l));
  }
  auto pooled = ad::Attention(seq, Param("att.w"), Param("att.b"), Param("att.v"), attention);
  return ad::Dense(pooled, Param("out.w"), Param("out.b"));
}

template <typename T>
void Model<T>::ZeroGrad() {
  for (auto &[_, p] : params_) p->grad.assign(p->size(), T(0));
}

template <typename T>
void Model<T>::SaveCheckpoint(const std::filesystem::path &path, int epoch, const Json &meta) const {
  Writer w;
  for (char c : kCheckpointMagic) w.Pod(c);
  w.Pod(kCheckpointVersion);
  w.Str(std::string(ArchName(config_.arch)));
  w.Str(config_.Digest());
  w.Pod(static_cast<int32_t>(epoch));
  w.Str(config_.ToJson().dump());
  w.Str(meta.dump());
  w.Pod(static_cast<uint32_t>(params_.size()));
  for (const auto &[name, p] : params_) {
    w.Str(name);
    w.Pod(static_cast<uint32_t>(p->shape.size()));
    for (int d : p->shape) w.Pod(static_cast<int32_t>(d));
    w.Floats(std::vector<float>(p->value.begin(), p->value.end()));
  }
  w.Pod(static_cast<uint32_t>(bn_.size()));
  for (const auto &[name, s] : bn_) {
    w.Str(name);
    w.Pod(static_cast<uint32_t>(s.mean.size()));
    w.Floats(std::vector<float>(s.mean.begin(), s.mean.end()));
    w.Floats(std::vector<float>(s.var.begin(), s.var.end()));
  }
  WriteFileAtomic(path, w.data());
}

template <typename T>
CheckpointHeader Model<T>::LoadCheckpoint(const std::filesystem::path &path) {
  Reader r(ReadFile(path));
  CheckpointHeader h = ReadHeader(r);
  if (h.arch != ArchName(config_.arch))
    throw Error(ErrorCode::kCheckpointMismatch,
                "checkpoint holds a " + h.arch + " model, expected " + std::string(ArchName(config_.arch)));
  if (h.digest != config_.Digest())
    throw Error(ErrorCode::kCheckpointMismatch,
                "checkpoint config digest " + h.digest + " differs from " + config_.Digest());
  const auto n_params = r.Pod<uint32_t>();
  if (n_params != params_.size())
    throw Error(ErrorCode::kCheckpointMismatch, "checkpoint parameter count differs");
  for (auto &[name, p] : params_) {
    const std::string stored = r.Str();
    const auto ndims = r.Pod<uint32_t>();
    ad::Shape shape;
    for (uint32_t i = 0; i < ndims; ++i) shape.push_back(r.Pod<int32_t>());
    if (stored != name || shape != p->shape)
      throw Error(ErrorCode::kCheckpointMismatch, "checkpoint tensor '" + stored + "' " +
                                                      ad::ShapeString(shape) + " does not match '" +
                                                      name + "' " + ad::ShapeString(p->shape));
    const auto v = r.Floats(p->size());
    p->value.assign(v.begin(), v.end());
  }
  const auto n_bn = r.Pod<uint32_t>();
  if (n_bn != bn_.size()) throw Error(ErrorCode::kCheckpointMismatch, "batch-norm count differs");
  for (auto &[name, s] : bn_) {
    const std::string stored = r.Str();
    const auto n = r.Pod<uint32_t>();
    if (stored != name || n != s.mean.size())
      throw Error(ErrorCode::kCheckpointMismatch, "batch-norm state '" + stored + "' does not match");
    const auto mean = r.Floats(n), var = r.Floats(n);
    s.mean.assign(mean.begin(), mean.end());
    s.var.assign(var.begin(), var.end());
  }
  return h;
}

CheckpointHeader ReadCheckpointHeader(const std::filesystem::path &path) {
  Reader r(ReadFile(path));
  return ReadHeader(r);
}

template class Model<float>;
template class Model<double>;

}  // namespace crossemo
