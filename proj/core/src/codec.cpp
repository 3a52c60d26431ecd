// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/codec.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "inrc/encoding.hpp"
#include "inrc/rng.hpp"

namespace inrc {

namespace {

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& m, int min_rows,
                               std::uint64_t seed) {
  if (m.rows() <= static_cast<Eigen::Index>(min_rows)) return m;
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<std::size_t>(m.rows()));
  Eigen::MatrixXd out(min_rows, m.cols());
  for (int i = 0; i < min_rows; ++i)
    out.row(i) = m.row(static_cast<Eigen::Index>(perm[i]));
  return out;
}

std::vector<std::uint8_t> entropy_code(const QuantizedParams& qp) {
  std::vector<CodeTensorView> views;
  views.reserve(qp.tensors.size());
  for (const auto& t : qp.tensors)
    views.push_back({std::span<const std::uint32_t>(t.codes), t.grid.bitwidth});
  return encode_codes(views);
}

QuantizedParams unpack_codes(const CodecContainer& container) {
  const auto layout = container.code_layout();
  auto codes = decode_codes(container.payload, layout);
  QuantizedParams qp;
  qp.mode = container.mode;
  qp.init_hash = container.init_hash;
  qp.tensors.resize(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    qp.tensors[i].grid = container.grids[i];
    qp.tensors[i].codes = std::move(codes[i]);
  }
  return qp;
}

}  // namespace

std::vector<std::uint8_t> encode_image(const ImageF& image,
                                       const EncodeOptions& options,
                                       const MetaInit* minit,
                                       EncodeReport* report) {
  const auto t_start = std::chrono::steady_clock::now();
  if (image.width < 2 || image.height < 2)
    throw ContractError("encode_image: image dimensions must be >= 2");
  ModelConfig model = options.model.canonical();
  if (minit) {
    if (!(minit->config.canonical() == model))
      throw ContractError(
          "encode_image: model config does not match the meta init");
  }
  model.validate();
  if (model.in_dim != 2 || model.out_dim != image.channels)
    throw ContractError("encode_image: config dims do not fit the image");

  const Eigen::MatrixXd grid = make_grid(image.width, image.height);
  const Eigen::MatrixXd inputs = encode_inputs(grid, model);
  const Eigen::MatrixXd targets = image_to_targets(image);

  ParamSet to_quantize;        // full weights or the delta, per mode
  const ParamSet* theta0 = nullptr;
  long epochs_run = 0;
  long best_epoch = -1;

  auto run_overfit = [&](const ParamSet& start,
                         const ParamSet* ref) -> ParamSet {
    if (options.precision == Precision::f32) {
      const MatX<float> in32 = inputs.cast<float>();
      const MatX<float> tg32 = targets.cast<float>();
      ParamSet32 ref32;
      if (ref) ref32 = cast_to_float(*ref);
      auto fit = overfit<float>(in32, tg32, model, cast_to_float(start),
                                options.overfit, ref ? &ref32 : nullptr);
      epochs_run = fit.epochs_run;
      best_epoch = fit.best_epoch;
      return cast_to_double(fit.params);
    }
    auto fit = overfit<double>(inputs, targets, model, start, options.overfit,
                               ref);
    epochs_run = fit.epochs_run;
    best_epoch = fit.best_epoch;
    return fit.params;
  };

  QuantMode mode = QuantMode::full;
  if (minit) {
    mode = QuantMode::delta;
    theta0 = &minit->theta0;
    const ParamSet warm =
        inner_loop(minit->theta0, minit->alpha, model, inputs, targets);
    ParamSet theta_star = run_overfit(warm, theta0);
    to_quantize = std::move(theta_star);
    to_quantize.role = ParamRole::delta;
    axpy(to_quantize, -1.0, *theta0);
  } else {
    const ParamSet start = init_siren(model, options.seed);
    to_quantize = run_overfit(start, nullptr);
  }

  QuantizedParams grids = quantize_params(to_quantize, options.bitwidth, mode);
  if (mode == QuantMode::delta) grids.init_hash = minit->content_hash();

  const Eigen::MatrixXd ada_inputs = subsample_rows(
      inputs, std::max(options.adaround_sample_rows, 4096),
      Rng(options.seed).fork(0x616461));  // "ada"
  const QuantizedParams rounded = adaround_params(
      to_quantize, model, ada_inputs, grids, options.adaround, theta0);

  const QatResult trained =
      qat(rounded, model, inputs, targets, options.qat, theta0);

  CodecContainer container;
  container.mode = mode;
  container.kind = PayloadKind::image;
  container.config = model;
  container.width = static_cast<std::uint32_t>(image.width);
  container.height = static_cast<std::uint32_t>(image.height);
  container.init_hash = grids.init_hash;
  container.grids.reserve(trained.qparams.tensors.size());
  for (const auto& t : trained.qparams.tensors) container.grids.push_back(t.grid);
  container.payload = entropy_code(trained.qparams);

  std::vector<std::uint8_t> bytes = serialize_container(container);

  if (report) {
    // Honest numbers: re-decode the bytes we just produced.
    const CodecContainer parsed = parse_container(bytes);
    ParamSet params = dequantize_params(unpack_codes(parsed), parsed.config);
    if (minit) {
      axpy(params, 1.0, *theta0);
      params.role = ParamRole::full;
    }
    const Eigen::MatrixXd y = forward(params, parsed.config, inputs);
    const ImageF decoded = targets_to_image(y, image.width, image.height);
    const ImageF decoded8 = quantize_8bit(decoded);
    report->mse = image_mse(image, decoded8);
    report->psnr = psnr_db(report->mse);
    report->container_bytes = bytes.size();
    report->bpp = bitrate_bpp(8 * static_cast<std::uint64_t>(bytes.size()),
                              image.width, image.height);
    report->epochs_run = epochs_run;
    report->best_epoch = best_epoch;
    report->qat_diverged = trained.diverged;
    report->delta_mode = (mode == QuantMode::delta);
    report->init_hash = grids.init_hash;
    report->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
  }
  return bytes;
}

ParamSet decode_params(const CodecContainer& container,
                       const InitRegistry* registry) {
  ParamSet params = dequantize_params(unpack_codes(container), container.config);
  if (container.mode == QuantMode::delta) {
    if (!registry)
      throw MissingInitError(
          "delta-mode container needs an initialization registry");
    const MetaInit minit = registry->find(container.init_hash);
    if (!minit.theta0.same_shape(params))
      throw ContractError("decode_params: init shape mismatch");
    axpy(params, 1.0, minit.theta0);
    params.role = ParamRole::full;
  }
  return params;
}

ImageF decode_image(std::span<const std::uint8_t> bytes,
                    const InitRegistry* registry, int scale) {
  if (scale < 1) throw ContractError("decode_image: scale >= 1");
  const CodecContainer container = parse_container(bytes);
  if (container.kind != PayloadKind::image)
    throw ContractError("decode_image: container does not hold an image");
  const ParamSet params = decode_params(container, registry);
  const int w = static_cast<int>(container.width) * scale;
  const int h = static_cast<int>(container.height) * scale;
  const Eigen::MatrixXd inputs =
      encode_inputs(make_grid(w, h), container.config);
  const Eigen::MatrixXd y = forward(params, container.config, inputs);
  return targets_to_image(y, w, h);
}

ImageF quantize_8bit(const ImageF& img) {
  ImageF out = img;
  for (double& v : out.pixels)
    v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

void append_rd_csv(const std::string& path, std::span<const RDPoint> points) {
  bool need_header = true;
  {
    std::ifstream probe(path);
    if (probe.good() && probe.peek() != EOF) need_header = false;
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot write " + path);
  if (need_header) out << "instance,method,width,b,bpp,psnr\n";
  for (const auto& p : points) {
    out << p.instance << ',' << p.method << ',';
    if (p.width > 0) out << p.width;
    out << ',';
    if (p.bitwidth > 0) out << p.bitwidth;
    out << ',' << p.bpp << ',' << p.psnr << '\n';
  }
}

std::vector<RDPoint> read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<RDPoint> points;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (first && line.rfind("instance,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::stringstream ss(line);
    std::string field;
    RDPoint p;
    auto next = [&]() {
      if (!std::getline(ss, field, ','))
        throw ParseError(path + ": short CSV row", lineno);
      return field;
    };
    p.instance = next();
    p.method = next();
    const std::string w = next();
    p.width = w.empty() ? 0 : std::stoi(w);
    const std::string b = next();
    p.bitwidth = b.empty() ? 0 : std::stoi(b);
    p.bpp = std::stod(next());
    p.psnr = std::stod(next());
    if (!(p.bpp > 0.0) || !std::isfinite(p.psnr))
      throw ParseError(path + ": invalid RD point", lineno);
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace inrc
