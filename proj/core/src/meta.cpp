// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/meta.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "inrc/bitstream.hpp"
#include "inrc/encoding.hpp"
#include "inrc/quant.hpp"
#include "inrc/rng.hpp"

namespace inrc {

namespace {

void append_f64(std::vector<std::uint8_t>& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double read_f64(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + 8 > bytes.size()) throw ParseError("init: truncated tensor", pos);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[pos + i]) << (8 * i);
  pos += 8;
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

void append_params(std::vector<std::uint8_t>& out, const ParamSet& p) {
  for (const auto& layer : p.layers) {
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
        append_f64(out, layer.W(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r)
      append_f64(out, layer.b(r));
  }
}

ParamSet read_params(std::span<const std::uint8_t> bytes, std::size_t& pos,
                     const ModelConfig& cfg) {
  ParamSet p;
  const int depth = cfg.linear_layers();
  p.layers.resize(depth);
  int fan_in = cfg.encoded_dim();
  for (int l = 0; l < depth; ++l) {
    const int fan_out = (l == depth - 1) ? cfg.out_dim : cfg.hidden_width;
    p.layers[l].W.resize(fan_out, fan_in);
    p.layers[l].b.resize(fan_out);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) p.layers[l].W(r, c) = read_f64(bytes, pos);
    for (int r = 0; r < fan_out; ++r) p.layers[l].b(r) = read_f64(bytes, pos);
    fan_in = fan_out;
  }
  return p;
}

std::vector<std::uint8_t> hashed_content(const MetaInit& init) {
  std::vector<std::uint8_t> buf;
  append_model_config(buf, init.config);
  const std::uint32_t k = static_cast<std::uint32_t>(init.alpha.size());
  for (int i = 0; i < 4; ++i)
    buf.push_back(static_cast<std::uint8_t>(k >> (8 * i)));
  append_params(buf, init.theta0);
  for (const auto& a : init.alpha) append_params(buf, a);
  return buf;
}

}  // namespace

Digest128 MetaInit::content_hash() const {
  const auto buf = hashed_content(*this);
  return murmur3_x64_128(buf.data(), buf.size());
}

void MetaInit::validate() const {
  config.validate();
  if (alpha.empty()) throw ContractError("MetaInit: k >= 1");
  for (const auto& a : alpha)
    if (!a.same_shape(theta0))
      throw ContractError("MetaInit: alpha entry shape mismatch");
}

void MetaTrainConfig::validate() const {
  if (!(outer_lr > 0.0)) throw ContractError("MetaTrainConfig: outer_lr > 0");
  if (inner_steps < 1) throw ContractError("MetaTrainConfig: inner_steps >= 1");
  if (steps_per_val < 1)
    throw ContractError("MetaTrainConfig: steps_per_val >= 1");
  if (val_size < 1) throw ContractError("MetaTrainConfig: val_size >= 1");
  if (lr_patience < 1) throw ContractError("MetaTrainConfig: lr_patience >= 1");
  if (!(lr_factor > 0.0 && lr_factor < 1.0))
    throw ContractError("MetaTrainConfig: lr_factor in (0,1)");
  if (epochs < 1) throw ContractError("MetaTrainConfig: epochs >= 1");
}

TrainInitResult train_init(const std::vector<ImageF>& dataset,
                           const std::vector<ImageF>& validation,
                           const MetaTrainConfig& mcfg,
                           const ModelConfig& raw_config,
                           const std::string& dataset_id) {
  mcfg.validate();
  const ModelConfig config = raw_config.canonical();
  config.validate();
  if (dataset.empty()) throw ContractError("train_init: empty dataset");
  const int w = dataset[0].width, h = dataset[0].height;
  auto check_res = [&](const ImageF& img) {
    if (img.width != w || img.height != h)
      throw ContractError("train_init: all images must share one resolution");
  };
  for (const auto& img : dataset) check_res(img);
  for (const auto& img : validation) check_res(img);

  // One grid/encoding serves every episode (shared resolution).
  const Eigen::MatrixXd inputs = encode_inputs(make_grid(w, h), config);
  std::vector<Eigen::MatrixXd> train_targets;
  train_targets.reserve(dataset.size());
  for (const auto& img : dataset) train_targets.push_back(image_to_targets(img));

  Rng rng(mcfg.seed);

  // Fixed validation subset of at most val_size images.
  std::vector<Eigen::MatrixXd> val_targets;
  {
    const auto& pool = validation.empty() ? dataset : validation;
    std::vector<std::size_t> idx;
    if (pool.size() > static_cast<std::size_t>(mcfg.val_size)) {
      Rng vr(rng.fork(0x76616c));  // "val"
      auto perm = vr.permutation(pool.size());
      idx.assign(perm.begin(), perm.begin() + mcfg.val_size);
    } else {
      idx.resize(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = i;
    }
    for (auto i : idx) val_targets.push_back(image_to_targets(pool[i]));
  }

  ParamSet theta0 = init_siren(config, rng.fork(0x696e6974));  // "init"
  theta0.role = ParamRole::init;
  std::vector<ParamSet> alpha(mcfg.inner_steps);
  for (auto& a : alpha) {
    a = zeros_like(theta0);
    for_each_tensor(a, [&](auto& t) { t.setConstant(mcfg.alpha_init); });
  }

  AdamState adam_theta = AdamState::like(theta0);
  std::vector<AdamState> adam_alpha;
  for (const auto& a : alpha) adam_alpha.push_back(AdamState::like(a));

  TrainInitResult res;
  double lr = mcfg.outer_lr;
  double best_val = std::numeric_limits<double>::infinity();
  int stale_validations = 0;
  std::uint64_t step = 0;

  auto run_validation = [&]() {
    double acc = 0.0;
    for (const auto& t : val_targets) {
      const ParamSet phi = inner_loop(theta0, alpha, config, inputs, t);
      const Eigen::MatrixXd y = forward(phi, config, inputs);
      acc += (y - t).squaredNorm() / static_cast<double>(inputs.rows());
    }
    const double val = acc / static_cast<double>(val_targets.size());
    res.val_losses.push_back(val);
    if (val < best_val) {
      best_val = val;
      res.init.theta0 = theta0;
      res.init.alpha = alpha;
      stale_validations = 0;
    } else if (++stale_validations >= mcfg.lr_patience) {
      lr *= mcfg.lr_factor;
      stale_validations = 0;
    }
  };

  for (int epoch = 0; epoch < mcfg.epochs; ++epoch) {
    Rng shuffle_rng(rng.fork(0x73687566 + static_cast<std::uint64_t>(epoch)));
    const auto order = shuffle_rng.permutation(dataset.size());
    for (std::size_t i : order) {
      MetaGrad mg;
      try {
        mg = meta_grad(theta0, alpha, config, inputs, train_targets[i]);
      } catch (const DivergedError&) {
        throw DivergedError("train_init: outer loss diverged",
                            static_cast<long>(step));
      }
      adam_step(adam_theta, theta0, mg.d_theta0, lr);
      for (std::size_t j = 0; j < alpha.size(); ++j)
        adam_step(adam_alpha[j], alpha[j], mg.d_alpha[j], lr);
      if (!theta0.all_finite())
        throw DivergedError("train_init: parameters diverged",
                            static_cast<long>(step));
      ++step;
      if (step % static_cast<std::uint64_t>(mcfg.steps_per_val) == 0)
        run_validation();
    }
  }
  if (step % static_cast<std::uint64_t>(mcfg.steps_per_val) != 0 || step == 0)
    run_validation();

  res.init.config = config;
  res.init.provenance_dataset = dataset_id;
  res.init.provenance_steps = step;
  res.init.theta0.role = ParamRole::init;
  res.best_val_loss = best_val;
  res.steps_run = step;
  return res;
}

OverfitMetaResult overfit_meta(const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets,
                               const MetaInit& minit,
                               const OverfitConfig& ocfg) {
  minit.validate();
  if (inputs.cols() != minit.config.encoded_dim())
    throw ContractError("overfit_meta: inputs do not match the init's config");

  const ParamSet warm =
      inner_loop(minit.theta0, minit.alpha, minit.config, inputs, targets);

  OverfitMetaResult res;
  res.fit = overfit(inputs, targets, minit.config, warm, ocfg, &minit.theta0);
  res.delta = res.fit.params;
  res.delta.role = ParamRole::delta;
  axpy(res.delta, -1.0, minit.theta0);
  // Rebase theta_star onto theta0 + delta so the decoder-side sum
  // reproduces it bit-exactly (the raw subtraction result does not round-
  // trip for every coordinate).
  res.theta_star = minit.theta0;
  res.theta_star.role = ParamRole::full;
  axpy(res.theta_star, 1.0, res.delta);
  return res;
}

std::vector<std::uint8_t> serialize_init(const MetaInit& init) {
  init.validate();
  std::vector<std::uint8_t> v;
  v.insert(v.end(), {'I', 'N', 'R', 'I'});
  v.push_back(kContainerVersion);
  append_model_config(v, init.config);
  const std::uint32_t k = static_cast<std::uint32_t>(init.alpha.size());
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>(k >> (8 * i)));
  const std::uint16_t idlen =
      static_cast<std::uint16_t>(init.provenance_dataset.size());
  v.push_back(static_cast<std::uint8_t>(idlen));
  v.push_back(static_cast<std::uint8_t>(idlen >> 8));
  v.insert(v.end(), init.provenance_dataset.begin(),
           init.provenance_dataset.end());
  for (int i = 0; i < 8; ++i)
    v.push_back(static_cast<std::uint8_t>(init.provenance_steps >> (8 * i)));
  const Digest128 hash = init.content_hash();
  v.insert(v.end(), hash.begin(), hash.end());
  append_params(v, init.theta0);
  for (const auto& a : init.alpha) append_params(v, a);
  return v;
}

MetaInit parse_init(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw ParseError("init: truncated", pos);
  };
  need(5);
  if (std::memcmp(bytes.data(), "INRI", 4) != 0)
    throw BadMagicError("init: bad magic", 0);
  pos = 4;
  const std::uint8_t version = bytes[pos++];
  if (version != kContainerVersion)
    throw BadVersionError("init: unsupported version", pos - 1);
  MetaInit init;
  init.config = read_model_config(bytes, pos);
  need(4);
  std::uint32_t k = 0;
  for (int i = 0; i < 4; ++i) k |= std::uint32_t(bytes[pos + i]) << (8 * i);
  pos += 4;
  if (k == 0 || k > 64) throw ParseError("init: bad inner step count", pos - 4);
  need(2);
  const std::uint16_t idlen =
      static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
  pos += 2;
  need(idlen);
  init.provenance_dataset.assign(
      reinterpret_cast<const char*>(bytes.data() + pos), idlen);
  pos += idlen;
  need(8);
  init.provenance_steps = 0;
  for (int i = 0; i < 8; ++i)
    init.provenance_steps |= std::uint64_t(bytes[pos + i]) << (8 * i);
  pos += 8;
  need(16);
  Digest128 stored;
  std::memcpy(stored.data(), bytes.data() + pos, 16);
  pos += 16;
  init.theta0 = read_params(bytes, pos, init.config);
  init.theta0.role = ParamRole::init;
  init.alpha.resize(k);
  for (auto& a : init.alpha) {
    a = read_params(bytes, pos, init.config);
    a.role = ParamRole::init;
  }
  if (pos != bytes.size()) throw ParseError("init: trailing bytes", pos);
  if (init.content_hash() != stored)
    throw HashMismatchError("init: content hash mismatch", pos);
  return init;
}

void save_init(const MetaInit& init, const std::string& path) {
  const auto bytes = serialize_init(init);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

MetaInit load_init(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_init(bytes);
}

MetaInit InitRegistry::find(const Digest128& hash) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir_, ec))
    throw MissingInitError("init registry directory not found: " + dir_);
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".inri")
      continue;
    try {
      MetaInit init = load_init(entry.path().string());
      if (init.content_hash() == hash) return init;
    } catch (const Error&) {
      continue;  // unreadable candidates are skipped, not fatal
    }
  }
  throw MissingInitError("no initialization with hash " + digest_hex(hash) +
                         " in " + dir_);
}

}  // namespace inrc
