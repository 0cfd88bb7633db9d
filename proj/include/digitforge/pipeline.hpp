#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "digitforge/design.hpp"
#include "digitforge/phantom.hpp"
#include "digitforge/registration.hpp"

namespace df {

enum class InputKind { Dicom, Raw, Phantom };

struct PipelineConfig {
  InputKind input_kind = InputKind::Phantom;
  std::filesystem::path dicom_dir;
  std::filesystem::path raw_header;
  PhantomSpec phantom;

  double skin_iso_hu = defaults::skin_iso_hu;
  double bone_iso_hu = defaults::bone_iso_hu;
  double min_component_mm3 = defaults::min_component_mm3;

  // optional overrides; the phantom stage supplies ground-truth planes
  std::optional<Plane> mirror_plane;
  std::optional<Plane> crop_plane;
  std::optional<Plane> extension_plane;

  DesignParams design;
  IcpParams icp;
  std::filesystem::path output_dir = "out";
};

PipelineConfig load_config(const std::filesystem::path& file);

struct PipelineResult {
  bool gates_passed = false;
  std::filesystem::path manifest_path;
};

// Stage names: phantom, ingest, mesh, mirror, register, sleeve, mould, export.
// Each stage reads the previous stage's artifacts from the output directory
// and writes its own; re-runs are idempotent.
void run_stage(const PipelineConfig& config, std::string_view stage);

PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace df
