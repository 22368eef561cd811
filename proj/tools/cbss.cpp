// cbss: command-line driver for unmixing, simulation, rate experiments and
// image separation. Exit codes: 0 ok, 2 bad input or config, 3 numerical
// failure, 4 too many failed replications.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cbss/asymlab.hpp"
#include "cbss/error.hpp"
#include "cbss/genproc.hpp"
#include "cbss/imagepipe.hpp"
#include "cbss/io.hpp"
#include "cbss/metrics.hpp"
#include "cbss/unmixer.hpp"

namespace fs = std::filesystem;
using namespace cbss;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitReplications = 4;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  auto out = detail::open_output(path);
  out << text;
}

// Prefix semantics: "out/run_" writes out/run_gamma.csv etc.; a directory
// prefix ("out/") writes into that directory.
std::string with_prefix(const std::string& prefix, const std::string& name) { return prefix + name; }

int cmd_unmix(const std::string& input, std::size_t tau, const std::string& prefix) {
  const TimeSeries x = read_timeseries_csv(input);
  if (tau == 0 || x.length() < 2 || tau > x.length() - 2)
    throw std::out_of_range("tau " + std::to_string(tau) + " outside [1, T-2] for T = " + std::to_string(x.length()));
  if (!x.all_finite()) throw ParseError(input + ": non-finite values");
  const UnmixingResult r = unmix(x, tau);
  const fs::path parent = fs::path(prefix).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  write_csv(with_prefix(prefix, "gamma.csv"), r.gamma);
  std::string lam = "lambda\n";
  for (double l : r.lambdas) lam += format_double(l) + "\n";
  write_text(with_prefix(prefix, "lambdas.csv"), lam);
  write_csv(with_prefix(prefix, "latent.csv"), apply_unmixing(r, x));
  if (r.has_near_ties()) std::cerr << "warning: near-tied eigenvalues, components may be poorly identified\n";
  return 0;
}

int cmd_md(const std::string& gamma_path, const std::string& mixing_path) {
  const CMat g = read_matrix_csv(gamma_path);
  const CMat a = read_matrix_csv(mixing_path);
  std::cout << format_double(md_index(g, a)) << '\n';
  return 0;
}

int cmd_simulate(const std::string& config, std::size_t length, std::uint64_t seed, const std::string& out,
                 const std::string& latent_out) {
  const ModelSpec model = model_from_json(read_json_file(config));
  const Generated g = generate(model, length, seed);
  write_csv(out, g.x);
  if (!latent_out.empty()) write_csv(latent_out, g.z);
  if (g.clamped_mass > 1e-8) std::cerr << "warning: circulant embedding clamped mass " << g.clamped_mass << '\n';
  return 0;
}

int cmd_rate(const std::string& config, const std::string& out_dir, unsigned threads) {
  RateExperimentConfig cfg = rate_config_from_json(read_json_file(config));
  if (threads) cfg.threads = threads;
  ensure_dir(out_dir);
  const RateExperimentReport rep = run_rate_experiment(cfg);
  {
    auto out = detail::open_output((fs::path(out_dir) / "report.csv").string());
    write_report_csv(out, rep);
  }
  write_text((fs::path(out_dir) / "summary.json").string(), summary_json(rep).dump(2) + "\n");
  std::cout << "fitted_slope " << format_double(rep.fitted_slope) << " (theory " << format_double(rep.theoretical_exponent)
            << ")\n";
  return 0;
}

int cmd_image(const std::vector<std::string>& inputs, std::uint64_t seed, std::size_t tau, const std::string& out_dir,
              bool identity) {
  if (inputs.size() != 3) throw std::invalid_argument("image: exactly three input images are required");
  std::vector<RgbImage> imgs;
  for (const auto& p : inputs) imgs.push_back(read_ppm(p));
  for (const auto& im : imgs)
    if (im.width != imgs[0].width || im.height != imgs[0].height)
      throw DimensionError("image: input images must have equal dimensions");
  if (tau == 0 || tau + 2 > imgs[0].width * imgs[0].height) throw std::out_of_range("image: tau outside [1, N-2]");
  ensure_dir(out_dir);
  const SeparationResult res = separate_images(imgs, {tau, seed, identity});
  for (std::size_t k = 0; k < res.mixed.size(); ++k) {
    write_ppm((fs::path(out_dir) / ("mixed_" + std::to_string(k + 1) + ".ppm")).string(), res.mixed[k]);
    write_ppm((fs::path(out_dir) / ("unmixed_" + std::to_string(k + 1) + ".ppm")).string(), res.unmixed[k]);
  }
  Json metrics = {{"md", res.md},
                  {"perturbed_pixels", res.perturbed_pixels},
                  {"tau", tau},
                  {"seed", seed},
                  {"identity_mixing", identity},
                  {"lambdas", res.estimate.lambdas},
                  {"mixing", detail::complex_matrix_json(res.mixing)}};
  write_text((fs::path(out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");
  std::cout << "md " << format_double(res.md) << '\n';
  return 0;
}

int cmd_make_images(const std::string& kind, std::size_t width, std::size_t height, std::uint64_t seed,
                    const std::string& out_dir) {
  std::vector<RgbImage> imgs;
  if (kind == "structured")
    imgs = structured_test_images(width, height, seed);
  else if (kind == "decorrelated")
    imgs = decorrelated_test_images(width, height);
  else
    throw std::invalid_argument("make-images: kind must be structured or decorrelated");
  ensure_dir(out_dir);
  for (std::size_t k = 0; k < imgs.size(); ++k)
    write_ppm((fs::path(out_dir) / (kind + "_" + std::to_string(k + 1) + ".ppm")).string(), imgs[k]);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex-valued blind source separation by lagged autocovariance"};
  app.require_subcommand(1);

  std::string input, prefix, config, out, latent_out, gamma_path, mixing_path, kind = "structured";
  std::vector<std::string> inputs;
  std::size_t tau = 1, length = 4096, width = 96, height = 64;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool identity = false;

  auto* unmix_cmd = app.add_subcommand("unmix", "Estimate the unmixing matrix of a CSV time series");
  unmix_cmd->add_option("--input", input, "T x d complex CSV (re_1,im_1,...)")->required();
  unmix_cmd->add_option("--tau", tau, "Lag");
  unmix_cmd->add_option("--out", prefix, "Output prefix")->required();

  auto* rate_cmd = app.add_subcommand("rate", "Run a convergence-rate experiment");
  rate_cmd->add_option("--config", config, "Experiment JSON")->required();
  rate_cmd->add_option("--out", out, "Output directory")->required();
  rate_cmd->add_option("--threads", threads, "Worker threads (overrides config and CBSS_THREADS)");

  auto* image_cmd = app.add_subcommand("image", "Mix and unmix three PPM images");
  image_cmd->add_option("--inputs", inputs, "Three P6 images")->required()->expected(3);
  image_cmd->add_option("--seed", seed, "Seed for the random mixing matrix")->required();
  image_cmd->add_option("--tau", tau, "Lag on the column-major vectorization");
  image_cmd->add_option("--out", out, "Output directory")->required();
  image_cmd->add_flag("--identity", identity, "Use A = I instead of a random mixing matrix");

  auto* md_cmd = app.add_subcommand("md", "Minimum-distance index of an estimate against a mixing matrix");
  md_cmd->add_option("--gamma", gamma_path, "Unmixing matrix CSV")->required();
  md_cmd->add_option("--mixing", mixing_path, "Mixing matrix CSV")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Generate an observed series from a model JSON");
  sim_cmd->add_option("--config", config, "Model JSON")->required();
  sim_cmd->add_option("--T", length, "Series length");
  sim_cmd->add_option("--seed", seed, "Seed")->required();
  sim_cmd->add_option("--out", out, "Output CSV")->required();
  sim_cmd->add_option("--latent", latent_out, "Optional CSV for the latent series");

  auto* img_gen = app.add_subcommand("make-images", "Write synthetic test images");
  img_gen->add_option("--kind", kind, "structured or decorrelated");
  img_gen->add_option("--width", width, "Width in pixels");
  img_gen->add_option("--height", height, "Height in pixels");
  img_gen->add_option("--seed", seed, "Seed for the speckle image");
  img_gen->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*unmix_cmd) return cmd_unmix(input, tau, prefix);
    if (*rate_cmd) return cmd_rate(config, out, threads);
    if (*image_cmd) return cmd_image(inputs, seed, tau, out, identity);
    if (*md_cmd) return cmd_md(gamma_path, mixing_path);
    if (*sim_cmd) return cmd_simulate(config, length, seed, out, latent_out);
    if (*img_gen) return cmd_make_images(kind, width, height, seed, out);
  } catch (const ReplicationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitReplications;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::logic_error& e) {
    // invalid_argument, out_of_range, DimensionError, domain_error
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
