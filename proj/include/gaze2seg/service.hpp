#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "gaze2seg/segmenter.hpp"

namespace g2s {

/// Per-session pipeline settings. sigma_px <= 0 and unset min_area_px
/// resolve to the width-scaled defaults when the session is created.
struct SessionConfig {
  double sigma_px = 0.0;
  int k = 2;
  std::optional<std::size_t> min_area_px;
  int margin_px = 3;
  BackendConfig backend;

  /// Throws Error(kInvalidArgument) on any out-of-range field.
  void validate() const;
};

struct ServiceOptions {
  /// Volumes addressable by name in POST /sessions {"volume": name}.
  std::filesystem::path data_dir;
  std::string cors_origin = "*";
  std::chrono::seconds idle_ttl{30 * 60};
};

/// REST session service for the live gaze loop:
///   POST   /sessions
///   POST   /sessions/{id}/gaze
///   GET    /sessions/{id}/overlay/{slice}/{layer}   layer: heatmap|coarse|segmentation|interpolated
///   POST   /sessions/{id}/segment
///   GET    /sessions/{id}/masklet
///   DELETE /sessions/{id}
class Service {
 public:
  explicit Service(ServiceOptions opts = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace g2s
