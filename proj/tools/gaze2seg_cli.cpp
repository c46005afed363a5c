// gaze2seg command-line front end. Talks to the library only through gaze2seg.h.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaze2seg/gaze2seg.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCaseFailures = 1;
constexpr int kExitInvalid = 2;

struct VolumeDeleter {
  void operator()(g2s_volume* v) const { g2s_volume_free(v); }
};
using VolumePtr = std::unique_ptr<g2s_volume, VolumeDeleter>;

int report(int status, const std::string& what) {
  std::cerr << "gaze2seg: " << what << ": " << g2s_status_name(status) << ": " << g2s_last_error() << "\n";
  return kExitInvalid;
}

VolumePtr load_mask(const std::string& path, long long label, int& status) {
  g2s_volume* v = nullptr;
  status = g2s_volume_load(path.c_str(), &v);
  if (status == G2S_OK && g2s_volume_is_mask(v) != 1) {
    g2s_volume_free(v);
    v = nullptr;
    status = g2s_volume_load_mask(path.c_str(), label, &v);
  }
  return VolumePtr(v);
}

std::vector<int64_t> parse_slices(const std::string& csv) {
  std::vector<int64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoll(item));
  }
  return out;
}

g2s_service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g2s_service_stop(g_service);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze-prompted interactive 3D segmentation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(g2s_version()));

  // run
  std::string spec_path;
  auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON spec");
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();

  // synth-gaze
  std::string gt_path, gaze_out;
  g2s_synth_params sp;
  g2s_synth_params_default(&sp);
  long long label = -1;
  auto* synth = app.add_subcommand("synth-gaze", "Synthesize a gaze log from a ground-truth mask");
  synth->add_option("--gt", gt_path, "Ground-truth mask (mvol or NIfTI)")->required();
  synth->add_option("--n", sp.n_points, "Samples per slice")->capture_default_str();
  synth->add_option("--inside", sp.inside_ratio, "Fraction of samples inside the organ")->capture_default_str();
  synth->add_option("--band", sp.band_px, "Outside samples stay within this distance (px)")->capture_default_str();
  synth->add_option("--seed", sp.seed, "PRNG seed")->capture_default_str();
  synth->add_option("--label", label, "Label id for multi-label masks (default: any nonzero)");
  synth->add_option("--out", gaze_out, "Output JSONL (default: stdout)");

  // interp
  std::string masks_path, slices_csv, interp_out = "masklet.mvol";
  auto* interp = app.add_subcommand("interp", "Fill a masklet from masks on selected slices");
  interp->add_option("--masks", masks_path, "Mask volume providing the prompted slices")->required();
  interp->add_option("--slices", slices_csv, "Comma-separated slice indices to keep")->required();
  interp->add_option("--out", interp_out, "Output masklet (mvol)")->capture_default_str();

  // dice
  std::string pred_path, dice_gt;
  auto* dice = app.add_subcommand("dice", "Dice score between two masks");
  dice->add_option("--pred", pred_path, "Predicted mask")->required();
  dice->add_option("--gt", dice_gt, "Ground-truth mask")->required();
  dice->add_option("--label", label, "Label id for multi-label ground truth");

  // serve
  std::string host = "127.0.0.1", data_dir, cors = "*";
  int port = 8080;
  int ttl_min = 30;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Directory of volumes addressable by name");
  serve->add_option("--cors-origin", cors, "Allowed CORS origin")->capture_default_str();
  serve->add_option("--ttl-min", ttl_min, "Idle session lifetime (minutes)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  if (*run) {
    g2s_run_summary summary{};
    const int st = g2s_run_experiment(spec_path.c_str(), &summary);
    if (st != G2S_OK) return report(st, "run");
    std::cout << summary.records << " records, " << summary.failures << " failed\n";
    return summary.failures ? kExitCaseFailures : kExitOk;
  }

  if (*synth) {
    int st = 0;
    auto gt = load_mask(gt_path, label, st);
    if (st != G2S_OK) return report(st, "load " + gt_path);
    char* text = nullptr;
    size_t warnings = 0;
    st = g2s_synth_gaze_log(gt.get(), &sp, &text, &warnings);
    if (st != G2S_OK) return report(st, "synth-gaze");
    std::unique_ptr<char, void (*)(char*)> holder(text, g2s_string_free);
    if (warnings) std::cerr << "gaze2seg: " << warnings << " slice(s) used the background fallback\n";
    if (gaze_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream(gaze_out) << text;
    }
    return kExitOk;
  }

  if (*interp) {
    int st = 0;
    auto masks = load_mask(masks_path, -1, st);
    if (st != G2S_OK) return report(st, "load " + masks_path);
    std::vector<int64_t> slices;
    try {
      slices = parse_slices(slices_csv);
    } catch (const std::exception&) {
      std::cerr << "gaze2seg: --slices must be comma-separated integers\n";
      return kExitInvalid;
    }
    int64_t dims[3];
    g2s_volume_dims(masks.get(), dims);
    std::vector<uint8_t> tags(static_cast<size_t>(dims[2]));
    g2s_volume* out = nullptr;
    st = g2s_interp_masklet(masks.get(), slices.data(), slices.size(), &out, tags.data());
    if (st != G2S_OK) return report(st, "interp");
    VolumePtr holder(out);
    st = g2s_volume_save(out, interp_out.c_str());
    if (st != G2S_OK) return report(st, "save " + interp_out);
    size_t counts[3] = {0, 0, 0};
    for (auto t : tags) ++counts[t];
    std::cout << "segmented " << counts[G2S_TAG_SEGMENTED] << ", interpolated " << counts[G2S_TAG_INTERPOLATED]
              << ", empty " << counts[G2S_TAG_EMPTY] << " -> " << interp_out << "\n";
    return kExitOk;
  }

  if (*dice) {
    int st = 0;
    auto pred = load_mask(pred_path, -1, st);
    if (st != G2S_OK) return report(st, "load " + pred_path);
    auto gt = load_mask(dice_gt, label, st);
    if (st != G2S_OK) return report(st, "load " + dice_gt);
    double d = 0.0;
    st = g2s_dice(pred.get(), gt.get(), &d);
    if (st != G2S_OK) return report(st, "dice");
    std::printf("%.6f\n", d);
    return kExitOk;
  }

  if (*serve) {
    g2s_service* svc = nullptr;
    int st = g2s_service_create(data_dir.empty() ? nullptr : data_dir.c_str(), cors.c_str(), ttl_min * 60, &svc);
    if (st != G2S_OK) return report(st, "serve");
    g_service = svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "gaze2seg: serving on http://" << host << ":" << port << "\n";
    st = g2s_service_listen(svc, host.c_str(), port);
    g_service = nullptr;
    g2s_service_free(svc);
    if (st != G2S_OK) return report(st, "serve");
    return kExitOk;
  }
  return kExitInvalid;
}
