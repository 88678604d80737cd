#pragma once

#include "corallite/baseline_seg.hpp"
#include "corallite/commands.hpp"
#include "corallite/regions.hpp"
#include "corallite/tracer.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace corallite {

/// Failure inside one pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message)
        : std::runtime_error("stage '" + stage + "' failed: " + message), stage_(std::move(stage))
    {
    }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

enum class SegmentationMode { baseline, ingest };

/// Full run description. Relative paths resolve against the config file's directory.
struct PipelineConfig {
    std::filesystem::path manifest;
    std::filesystem::path work_dir;

    int tile_size = 224;
    int step = 224;
    int depth = 5;

    SegmentationMode segmentation = SegmentationMode::baseline;
    SegParams seg;
    std::filesystem::path prob_dir;  // ingest mode: prob_0000.png, ...

    double topo_weight = 0.1;
    Connectivity connectivity = Connectivity::eight;
    TraceParams trace;
    int ring = 16;
    bool caps = true;

    bool run_evaluate = true;
    bool run_trace = true;
    bool run_reconstruct = true;

    /// Throws std::invalid_argument on any parameter outside its module's domain.
    void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig read_pipeline_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);

/// tile -> segment -> stitch -> evaluate -> trace -> reconstruct. Every stage
/// writes its artifact and <stage>_summary.json into work_dir. Throws
/// StageError naming the failing stage.
nlohmann::json run_pipeline(const PipelineConfig& config);

} // namespace corallite
