// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
//
// inrc: neural-field image and SDF codec.
//   encode / decode       compress images to .inrc containers and back
//   sweep                 rate-distortion sweep over model widths
//   meta-train            learn an initialization from an image directory
//   sdf-encode/sdf-decode 3D shape compression
//   eval                  RD measurement and external-baseline CSV ingestion
//   resize                box-filter resample for dataset preparation

#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <thread>

#include "inrc/codec.hpp"
#include "inrc/encoding.hpp"
#include "inrc/meta.hpp"
#include "inrc/rng.hpp"
#include "inrc/sdf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace inrc;

namespace {

struct ModelFlags {
  int width = 32;
  int layers = 3;
  std::string activation = "sine";
  double omega = 30.0;
  bool omega_set = false;
  std::string encoding = "positional";
  int frequencies = 16;
  double sigma = 0.0;
  bool sigma_set = false;
  std::uint64_t enc_seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--width", width, "Hidden units per layer (M)")
        ->capture_default_str();
    app->add_option("--layers", layers, "Hidden layers (N)")
        ->capture_default_str();
    app->add_option("--activation", activation, "sine|relu")
        ->check(CLI::IsMember({"sine", "relu"}))
        ->capture_default_str();
    app->add_option("--omega", omega,
                    "Sine frequency (default 30 for sine, 1 for relu)")
        ->each([this](const std::string&) { omega_set = true; });
    app->add_option("--encoding", encoding, "positional|gaussian|none")
        ->check(CLI::IsMember({"positional", "gaussian", "none"}))
        ->capture_default_str();
    app->add_option("--frequencies", frequencies, "Encoding frequencies (L)")
        ->capture_default_str();
    app->add_option("--sigma", sigma,
                    "Frequency spacing (default 1.4 positional, 4 gaussian)")
        ->each([this](const std::string&) { sigma_set = true; });
    app->add_option("--enc-seed", enc_seed, "Gaussian encoding seed")
        ->capture_default_str();
  }

  ModelConfig build(int in_dim, int out_dim) const {
    ModelConfig cfg;
    cfg.in_dim = in_dim;
    cfg.out_dim = out_dim;
    cfg.hidden_layers = layers;
    cfg.hidden_width = width;
    cfg.activation = activation == "relu" ? Activation::relu : Activation::sine;
    cfg.omega = omega_set ? omega : (activation == "relu" ? 1.0 : 30.0);
    cfg.encoding = encoding == "none"
                       ? EncodingKind::none
                       : (encoding == "gaussian" ? EncodingKind::gaussian
                                                 : EncodingKind::positional);
    cfg.frequencies = frequencies;
    cfg.sigma = sigma_set ? sigma : (encoding == "gaussian" ? 4.0 : 1.4);
    cfg.encoding_seed = enc_seed;
    return cfg.canonical();
  }
};

struct EncodeFlags {
  ModelFlags model;
  long epochs = 25000;
  double lr = 5e-4;
  double lambda = 1e-5;
  bool lambda_set = false;
  long plateau_patience = 500;
  double plateau_factor = 0.5;
  long early_stop = 5000;
  long warmup = -1;  // -1: 0 basic, 100 with an init
  int bitwidth = 0;  // 0: 8 basic, 7 with an init
  int adaround_iters = 1000;
  double adaround_reg = 1e-4;
  long qat_epochs = 300;
  double qat_lr = 1e-6;
  std::uint64_t seed = 0;
  std::string precision = "f64";
  std::string init_path;

  void attach(CLI::App* app, bool with_init) {
    model.attach(app);
    app->add_option("--epochs", epochs, "Overfitting epochs")
        ->capture_default_str();
    app->add_option("--lr", lr, "Initial learning rate")->capture_default_str();
    app->add_option("--lambda", lambda, "L1 regularization weight")
        ->each([this](const std::string&) { lambda_set = true; });
    app->add_option("--plateau-patience", plateau_patience,
                    "Epochs without improvement before halving the rate")
        ->capture_default_str();
    app->add_option("--plateau-factor", plateau_factor, "Rate decay factor")
        ->capture_default_str();
    app->add_option("--early-stop", early_stop,
                    "Stop after this many epochs without improvement")
        ->capture_default_str();
    app->add_option("--warmup", warmup,
                    "Linear warmup epochs (default 0, 100 with --init)");
    app->add_option("--bitwidth", bitwidth,
                    "Quantization bitwidth (default 8, 7 with --init)");
    app->add_option("--adaround-iters", adaround_iters, "AdaRound iterations")
        ->capture_default_str();
    app->add_option("--adaround-reg", adaround_reg, "AdaRound regularizer")
        ->capture_default_str();
    app->add_option("--qat-epochs", qat_epochs, "Retraining epochs")
        ->capture_default_str();
    app->add_option("--qat-lr", qat_lr, "Retraining learning rate")
        ->capture_default_str();
    app->add_option("--seed", seed, "Run seed")->capture_default_str();
    app->add_option("--precision", precision, "f64|f32 overfitting precision")
        ->check(CLI::IsMember({"f64", "f32"}))
        ->capture_default_str();
    if (with_init)
      app->add_option("--init", init_path,
                      "Meta initialization (.inri); switches to delta mode");
  }

  EncodeOptions build() const {
    EncodeOptions o;
    const bool meta = !init_path.empty();
    o.model = model.build(2, 3);
    o.overfit.epochs = epochs;
    o.overfit.lr0 = lr;
    o.overfit.l1_lambda = lambda;
    o.overfit.plateau_patience = plateau_patience;
    o.overfit.plateau_factor = plateau_factor;
    o.overfit.early_stop = early_stop;
    o.overfit.warmup_epochs =
        warmup >= 0 ? warmup : (meta ? std::min<long>(100, epochs) : 0);
    o.bitwidth = bitwidth > 0 ? bitwidth : (meta ? 7 : 8);
    o.adaround.iters = adaround_iters;
    o.adaround.reg_lambda = adaround_reg;
    o.qat.epochs = qat_epochs;
    o.qat.lr = qat_lr;
    o.seed = seed;
    o.precision = precision == "f32" ? Precision::f32 : Precision::f64;
    return o;
  }

  json flags_json() const {
    const EncodeOptions o = build();
    return json{{"width", o.model.hidden_width},
                {"layers", o.model.hidden_layers},
                {"activation",
                 o.model.activation == Activation::sine ? "sine" : "relu"},
                {"omega", o.model.omega},
                {"encoding", o.model.encoding == EncodingKind::none
                                 ? "none"
                                 : (o.model.encoding == EncodingKind::gaussian
                                        ? "gaussian"
                                        : "positional")},
                {"frequencies", o.model.frequencies},
                {"sigma", o.model.sigma},
                {"enc_seed", o.model.encoding_seed},
                {"epochs", o.overfit.epochs},
                {"lr", o.overfit.lr0},
                {"lambda", o.overfit.l1_lambda},
                {"plateau_patience", o.overfit.plateau_patience},
                {"plateau_factor", o.overfit.plateau_factor},
                {"early_stop", o.overfit.early_stop},
                {"warmup", o.overfit.warmup_epochs},
                {"bitwidth", o.bitwidth},
                {"adaround_iters", o.adaround.iters},
                {"adaround_reg", o.adaround.reg_lambda},
                {"qat_epochs", o.qat.epochs},
                {"qat_lr", o.qat.lr},
                {"seed", o.seed},
                {"precision", precision},
                {"init", init_path}};
  }
};

std::optional<std::string> registry_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("INRC_INIT_DIR")) return std::string(env);
  return std::nullopt;
}

json report_json(const EncodeReport& r) {
  return json{{"bpp", r.bpp},
              {"psnr_db", r.psnr},
              {"mse", r.mse},
              {"epochs_run", r.epochs_run},
              {"best_epoch", r.best_epoch},
              {"wall_seconds", r.wall_seconds},
              {"container_bytes", r.container_bytes},
              {"qat_diverged", r.qat_diverged},
              {"mode", r.delta_mode ? "delta" : "full"},
              {"init_hash", r.delta_mode ? digest_hex(r.init_hash) : ""}};
}

std::vector<std::string> list_images(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  return paths;
}

// Bounded per-image worker pool; results land in submission order. The
// first exception (if any) is rethrown on the calling thread after all
// workers drain.
template <typename Job>
void run_jobs(const std::vector<Job>& jobs, unsigned requested_workers) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(requested_workers ? requested_workers : hw,
                                      static_cast<unsigned>(jobs.size())));
  if (workers <= 1) {
    for (const auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        try {
          jobs[i]();
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

int cmd_encode(const EncodeFlags& flags, const std::string& input,
               const std::string& output, const std::string& report_path) {
  const ImageF image = load_ppm(input);
  std::optional<MetaInit> minit;
  if (!flags.init_path.empty()) minit = load_init(flags.init_path);
  EncodeOptions options = flags.build();
  if (minit) options.model = minit->config.canonical();
  EncodeReport report;
  const auto bytes =
      encode_image(image, options, minit ? &*minit : nullptr, &report);
  write_file(output, bytes);
  json out = report_json(report);
  out["input"] = input;
  out["output"] = output;
  out["flags"] = flags.flags_json();
  std::cout << out.dump(2) << "\n";
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    f << out.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inrc: overfit neural-field codec for images and SDFs"};
  app.require_subcommand(1);

  // --- encode ---
  auto* enc = app.add_subcommand("encode", "Compress an image to .inrc");
  EncodeFlags enc_flags;
  std::string enc_in, enc_out, enc_report;
  enc->add_option("--input,-i", enc_in, "Input image (PPM P6)")->required();
  enc->add_option("--output,-o", enc_out, "Output container (.inrc)")
      ->required();
  enc->add_option("--report", enc_report, "Write the JSON report here too");
  enc_flags.attach(enc, true);

  // --- decode ---
  auto* dec = app.add_subcommand("decode", "Decode an .inrc container");
  std::string dec_in, dec_out, dec_init_dir;
  int dec_scale = 1;
  dec->add_option("--input,-i", dec_in, "Container (.inrc)")->required();
  dec->add_option("--output,-o", dec_out, "Output image (PPM P6)")->required();
  dec->add_option("--scale", dec_scale, "Evaluate on a scale-times finer grid")
      ->capture_default_str();
  dec->add_option("--init-dir", dec_init_dir,
                  "Init registry directory (default $INRC_INIT_DIR)");

  // --- eval ---
  auto* ev = app.add_subcommand(
      "eval", "Measure (bpp, PSNR) of a container or merge baseline CSVs");
  std::string ev_image, ev_container, ev_csv, ev_merge, ev_method = "inrc",
                                                        ev_instance,
                                                        ev_init_dir;
  ev->add_option("--image", ev_image, "Original image (PPM P6)");
  ev->add_option("--container", ev_container, "Encoded .inrc");
  ev->add_option("--csv", ev_csv, "Append the RD point to this CSV");
  ev->add_option("--merge", ev_merge,
                 "Merge RD points from an external CSV into --csv");
  ev->add_option("--method", ev_method, "Method label for the CSV row")
      ->capture_default_str();
  ev->add_option("--instance", ev_instance, "Instance label (default: stem)");
  ev->add_option("--init-dir", ev_init_dir, "Init registry directory");

  // --- sweep ---
  auto* sw = app.add_subcommand(
      "sweep", "Encode a directory at several widths and emit an RD CSV");
  EncodeFlags sw_flags;
  std::string sw_dir, sw_csv, sw_keep;
  std::vector<int> sw_widths = {32, 48, 64, 128};
  unsigned sw_jobs = 0;
  sw->add_option("--input-dir", sw_dir, "Directory of .ppm images")->required();
  sw->add_option("--csv", sw_csv, "Output CSV")->required();
  sw->add_option("--widths", sw_widths, "Hidden widths to sweep")
      ->delimiter(',')
      ->capture_default_str();
  sw->add_option("--keep-dir", sw_keep, "Keep the .inrc files here");
  sw->add_option("--jobs", sw_jobs, "Worker threads (default: cores)");
  sw_flags.attach(sw, true);

  // --- meta-train ---
  auto* mt = app.add_subcommand(
      "meta-train", "Learn a meta initialization from an image directory");
  ModelFlags mt_model;
  std::string mt_dir, mt_val_dir, mt_out, mt_dataset_id;
  MetaTrainConfig mt_cfg;
  mt->add_option("--input-dir", mt_dir, "Training images (.ppm, one size)")
      ->required();
  mt->add_option("--val-dir", mt_val_dir,
                 "Validation images (default: held out of --input-dir)");
  mt->add_option("--output,-o", mt_out, "Output init (.inri)")->required();
  mt->add_option("--dataset-id", mt_dataset_id, "Provenance label");
  mt_model.attach(mt);
  mt->add_option("--outer-lr", mt_cfg.outer_lr, "Outer loop rate (beta)")
      ->capture_default_str();
  mt->add_option("--alpha-init", mt_cfg.alpha_init, "Initial inner rates")
      ->capture_default_str();
  mt->add_option("--k", mt_cfg.inner_steps, "Inner loop steps")
      ->capture_default_str();
  mt->add_option("--steps-per-val", mt_cfg.steps_per_val,
                 "Outer steps between validations")
      ->capture_default_str();
  mt->add_option("--val-size", mt_cfg.val_size, "Validation subset size")
      ->capture_default_str();
  mt->add_option("--lr-patience", mt_cfg.lr_patience,
                 "Validations without improvement before halving beta")
      ->capture_default_str();
  mt->add_option("--lr-factor", mt_cfg.lr_factor, "Outer rate decay factor")
      ->capture_default_str();
  mt->add_option("--meta-epochs", mt_cfg.epochs, "Dataset passes")
      ->capture_default_str();
  mt->add_option("--seed", mt_cfg.seed, "Run seed")->capture_default_str();

  // --- sdf-encode ---
  auto* se = app.add_subcommand("sdf-encode", "Compress a mesh SDF to .inrc");
  ModelFlags se_model;
  se_model.frequencies = 16;
  std::string se_in, se_out, se_report;
  SdfEncodeOptions se_opts;
  long se_epochs = 500, se_batch = 10000, se_qat_epochs = 50;
  double se_lr = 5e-5, se_qat_lr = 1e-7;
  int se_bitwidth = 8, se_adaround_iters = 2000;
  std::size_t se_samples = 100000;
  std::uint64_t se_seed = 0;
  se->add_option("--input,-i", se_in, "Input mesh (.obj or .off)")->required();
  se->add_option("--output,-o", se_out, "Output container (.inrc)")->required();
  se->add_option("--report", se_report, "Write the JSON report here too");
  se_model.attach(se);
  se->add_option("--samples", se_samples, "SDF sample count")
      ->capture_default_str();
  se->add_option("--batch", se_batch, "Minibatch size")->capture_default_str();
  se->add_option("--epochs", se_epochs, "Training epochs")
      ->capture_default_str();
  se->add_option("--lr", se_lr, "Initial learning rate")->capture_default_str();
  se->add_option("--bitwidth", se_bitwidth, "Quantization bitwidth")
      ->capture_default_str();
  se->add_option("--adaround-iters", se_adaround_iters, "AdaRound iterations")
      ->capture_default_str();
  se->add_option("--qat-epochs", se_qat_epochs, "Retraining epochs")
      ->capture_default_str();
  se->add_option("--qat-lr", se_qat_lr, "Retraining learning rate")
      ->capture_default_str();
  se->add_option("--seed", se_seed, "Run seed")->capture_default_str();

  // --- sdf-decode ---
  auto* sd = app.add_subcommand("sdf-decode", "Reconstruct a mesh from .inrc");
  std::string sd_in, sd_out;
  int sd_resolution = 128;
  sd->add_option("--input,-i", sd_in, "Container (.inrc)")->required();
  sd->add_option("--output,-o", sd_out, "Output mesh (.obj)")->required();
  sd->add_option("--resolution", sd_resolution, "Grid resolution per axis")
      ->capture_default_str();

  // --- resize ---
  auto* rs = app.add_subcommand(
      "resize", "Box-filter resample (and optional crop) for dataset prep");
  std::string rs_in, rs_out;
  int rs_w = 0, rs_h = 0;
  std::vector<int> rs_crop;
  rs->add_option("--input,-i", rs_in, "Input image (PPM P6)")->required();
  rs->add_option("--output,-o", rs_out, "Output image (PPM P6)")->required();
  rs->add_option("--width", rs_w, "Target width")->required();
  rs->add_option("--height", rs_h, "Target height")->required();
  rs->add_option("--crop", rs_crop, "x,y,w,h window applied before resizing")
      ->delimiter(',')
      ->expected(4);

  CLI11_PARSE(app, argc, argv);

  try {
    if (enc->parsed()) return cmd_encode(enc_flags, enc_in, enc_out, enc_report);

    if (dec->parsed()) {
      const auto bytes = read_file(dec_in);
      std::optional<InitRegistry> reg;
      if (const auto dir = registry_dir(dec_init_dir)) reg.emplace(*dir);
      const ImageF img = decode_image(bytes, reg ? &*reg : nullptr, dec_scale);
      save_ppm(img, dec_out);
      return 0;
    }

    if (ev->parsed()) {
      if (!ev_merge.empty()) {
        if (ev_csv.empty())
          throw ContractError("eval --merge needs --csv");
        const auto points = read_rd_csv(ev_merge);
        append_rd_csv(ev_csv, points);
        std::cout << json{{"merged_points", points.size()}, {"csv", ev_csv}}
                         .dump(2)
                  << "\n";
        return 0;
      }
      if (ev_image.empty() || ev_container.empty())
        throw ContractError("eval needs --image and --container (or --merge)");
      const ImageF orig = load_ppm(ev_image);
      const auto bytes = read_file(ev_container);
      std::optional<InitRegistry> reg;
      if (const auto dir = registry_dir(ev_init_dir)) reg.emplace(*dir);
      const ImageF decoded = decode_image(bytes, reg ? &*reg : nullptr);
      const double mse = image_mse(orig, quantize_8bit(decoded));
      const double psnr = psnr_db(mse);
      const double bpp = bitrate_bpp(8 * static_cast<std::uint64_t>(bytes.size()),
                                     orig.width, orig.height);
      const CodecContainer parsed = parse_container(bytes);
      RDPoint point{ev_instance.empty() ? fs::path(ev_image).stem().string()
                                        : ev_instance,
                    ev_method, parsed.config.hidden_width,
                    parsed.grids.empty() ? 0 : parsed.grids[0].bitwidth, bpp,
                    psnr};
      if (!ev_csv.empty()) append_rd_csv(ev_csv, {&point, 1});
      std::cout << json{{"instance", point.instance},
                        {"method", point.method},
                        {"width", point.width},
                        {"b", point.bitwidth},
                        {"bpp", bpp},
                        {"psnr_db", psnr}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (sw->parsed()) {
      const auto paths = list_images(sw_dir);
      if (paths.empty()) throw ContractError("sweep: no .ppm images in " + sw_dir);
      std::optional<MetaInit> minit;
      if (!sw_flags.init_path.empty()) minit = load_init(sw_flags.init_path);
      const std::string method = minit ? "meta" : "basic";
      if (!sw_keep.empty()) fs::create_directories(sw_keep);

      struct Row {
        RDPoint point;
      };
      std::vector<Row> rows(paths.size() * sw_widths.size());
      std::vector<std::function<void()>> jobs;
      for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        for (std::size_t wi = 0; wi < sw_widths.size(); ++wi) {
          jobs.push_back([&, pi, wi] {
            const ImageF image = load_ppm(paths[pi]);
            EncodeOptions options = sw_flags.build();
            options.model.hidden_width = sw_widths[wi];
            if (minit && minit->config.hidden_width != sw_widths[wi])
              throw ContractError(
                  "sweep: --init width does not match a swept width");
            EncodeReport report;
            const auto bytes = encode_image(
                image, options, minit ? &*minit : nullptr, &report);
            const std::string stem = fs::path(paths[pi]).stem().string();
            if (!sw_keep.empty())
              write_file((fs::path(sw_keep) /
                          (stem + "_w" + std::to_string(sw_widths[wi]) +
                           ".inrc"))
                             .string(),
                         bytes);
            rows[pi * sw_widths.size() + wi].point =
                RDPoint{stem, method, sw_widths[wi], options.bitwidth,
                        report.bpp, report.psnr};
          });
        }
      }
      run_jobs(jobs, sw_jobs);
      std::vector<RDPoint> points;
      points.reserve(rows.size());
      for (const auto& r : rows) points.push_back(r.point);
      append_rd_csv(sw_csv, points);
      std::cout << json{{"images", paths.size()},
                        {"widths", sw_widths.size()},
                        {"rows", points.size()},
                        {"csv", sw_csv}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (mt->parsed()) {
      const auto train_paths = list_images(mt_dir);
      if (train_paths.empty())
        throw ContractError("meta-train: no .ppm images in " + mt_dir);
      std::vector<ImageF> train, val;
      for (const auto& p : train_paths) train.push_back(load_ppm(p));
      if (!mt_val_dir.empty()) {
        for (const auto& p : list_images(mt_val_dir)) val.push_back(load_ppm(p));
      } else if (train.size() > 1) {
        // Seeded holdout when no validation directory is given.
        Rng rng(Rng(mt_cfg.seed).fork(0x686f6c64));  // "hold"
        const std::size_t nval = std::min<std::size_t>(
            std::max<std::size_t>(1, train.size() / 10), mt_cfg.val_size);
        const auto perm = rng.permutation(train.size());
        std::vector<ImageF> rest;
        for (std::size_t i = 0; i < perm.size(); ++i)
          (i < nval ? val : rest).push_back(std::move(train[perm[i]]));
        train = std::move(rest);
      }
      const ModelConfig cfg = mt_model.build(2, 3);
      const TrainInitResult res = train_init(
          train, val, mt_cfg, cfg,
          mt_dataset_id.empty() ? fs::path(mt_dir).filename().string()
                                : mt_dataset_id);
      save_init(res.init, mt_out);
      std::cout << json{{"output", mt_out},
                        {"hash", digest_hex(res.init.content_hash())},
                        {"steps", res.steps_run},
                        {"best_val_loss", res.best_val_loss},
                        {"validations", res.val_losses.size()},
                        {"train_images", train.size()},
                        {"val_images", val.size()}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (se->parsed()) {
      const Mesh mesh = load_mesh(se_in);
      se_opts.model = se_model.build(3, 1);
      se_opts.train.epochs = se_epochs;
      se_opts.train.lr0 = se_lr;
      se_opts.train.batch = se_batch;
      se_opts.bitwidth = se_bitwidth;
      se_opts.adaround.iters = se_adaround_iters;
      se_opts.qat.epochs = se_qat_epochs;
      se_opts.qat.lr = se_qat_lr;
      se_opts.samples = se_samples;
      se_opts.seed = se_seed;
      SdfEncodeReport report;
      const auto bytes = encode_sdf(mesh, se_opts, &report);
      write_file(se_out, bytes);
      json out{{"input", se_in},
               {"output", se_out},
               {"container_bytes", report.container_bytes},
               {"sample_mse", report.sample_mse},
               {"epochs_run", report.epochs_run},
               {"wall_seconds", report.wall_seconds}};
      std::cout << out.dump(2) << "\n";
      if (!se_report.empty()) {
        std::ofstream f(se_report);
        f << out.dump(2) << "\n";
      }
      return 0;
    }

    if (sd->parsed()) {
      const auto bytes = read_file(sd_in);
      const Mesh mesh = decode_sdf(bytes, sd_resolution);
      save_obj(mesh, sd_out);
      std::cout << json{{"vertices", mesh.vertices.size()},
                        {"triangles", mesh.triangles.size()},
                        {"output", sd_out}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (rs->parsed()) {
      ImageF img = load_ppm(rs_in);
      if (!rs_crop.empty())
        img = crop(img, rs_crop[0], rs_crop[1], rs_crop[2], rs_crop[3]);
      save_ppm(box_resize(img, rs_w, rs_h), rs_out);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "inrc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
