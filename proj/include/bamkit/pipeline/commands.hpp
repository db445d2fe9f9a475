#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bamkit/cnn/classifier_eval.hpp"
#include "bamkit/eval/metrics.hpp"
#include "bamkit/pipeline/config.hpp"

namespace bamkit::pipeline {

// Output layout under the run directory:
//   data/      dataset.json, {train,val,test}_{images,masks}.tnsr, ldi/<id>/{scan.png,landmarks.json}
//   model/     checkpoint.json, params/*.tnsr
//   gradcam/   <id>/{gradcam.png,gradcam.tnsr,gradcam_mask.png}
//   bam/       index.json, <id>/{image,gradcam,gradcam_mask,bam_heatmap,bam_mask,overlay}.png, bam_heatmap.tnsr,
//              trace.json, segmentation.json
//   seg/       index.json, <id>/{mask.png,threshold.json}
//   ldi/       <id>/{warped.png,categories.png,hp_lt_14.png,hp_14_21.png,hp_gt_21.png,ldi_all.png,alignment.json}
//   reports/   classifier.json, segmentation.json, segmentation_table.txt
//   config/    resolved config per command
//   manifests/ one manifest per command
std::string sample_id(std::size_t index);

void cmd_synth(const PipelineConfig& cfg, const std::filesystem::path& out);
void cmd_train(const PipelineConfig& cfg, const std::filesystem::path& out);
cnn::ClassifierReport cmd_eval_clf(const PipelineConfig& cfg, const std::filesystem::path& out);
// With `image`, processes that PNG alone; otherwise the test split.
void cmd_gradcam(const PipelineConfig& cfg, const std::filesystem::path& out,
                 const std::optional<std::filesystem::path>& image = std::nullopt);
void cmd_bam(const PipelineConfig& cfg, const std::filesystem::path& out,
             const std::optional<std::filesystem::path>& image = std::nullopt);
// Re-segments the fused maps written by cmd_bam with the current settings.
void cmd_segment(const PipelineConfig& cfg, const std::filesystem::path& out);
void cmd_ldi_prep(const PipelineConfig& cfg, const std::filesystem::path& out);

struct SegmentationEvaluation {
  std::vector<eval::BatchReport> rows;  // five BAM rows, then two Grad-CAM rows
  std::string table;
};

SegmentationEvaluation cmd_eval_seg(const PipelineConfig& cfg, const std::filesystem::path& out);

// synth, train, eval-clf, bam, segment, ldi-prep, eval-seg.
void cmd_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out);

}  // namespace bamkit::pipeline
