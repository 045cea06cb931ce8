#pragma once

#include <string>

#include "dampe/config.hpp"
#include "dampe/hetgraph.hpp"
#include "dampe/matrix.hpp"
#include "dampe/predictor.hpp"
#include "dampe/synthdata.hpp"

namespace dampe {

/// Dataset view shared by the pipeline stages, either generated in-process
/// or loaded from a data directory.
struct DataBundle {
    DenseMatrix e_seq;
    DenseMatrix e_struc;
    DenseMatrix z;
    HetGraph graph;
    LabelMatrix labels;
};

DataBundle load_dataset_dir(const std::string& dir);

struct EvalMetrics {
    double fmax_value = 0.0;
    double fmax_threshold = 0.0;
    double aupr_value = 0.0;
    std::string metrics_path;
};

/// Stage driver. Stage outputs are content-addressed by a hash of the config
/// keys the stage depends on; a finished stage directory is reused as-is,
/// which makes every subcommand idempotent and the pipeline resumable.
class Pipeline {
public:
    Pipeline(RunConfig config, std::string out_dir);

    const RunConfig& config() const { return cfg_; }
    const std::string& out_dir() const { return out_; }

    std::string gen_data();   // returns the data directory
    std::string align();      // plan + aligned intrinsic features H
    std::string pretrain();   // CGG checkpoints + training log
    std::string finetune();   // classifier + fine-tuned condition encoder
    EvalMetrics evaluate();   // predictions + metrics CSV

    EvalMetrics run_all();

    /// Condition-encoder micro-benchmark; writes a CSV report and returns its
    /// path. Requires a fine-tuned checkpoint and repeats >= 10.
    std::string bench(std::size_t repeats);

private:
    SynthConfig synth_config() const;
    DataBundle load_data();
    DenseMatrix intrinsic_features(const DataBundle& data, const std::string& align_dir) const;
    std::string stage_dir(const std::string& stage, const std::string& hash) const;
    bool stage_done(const std::string& dir) const;
    void mark_done(const std::string& dir) const;

    RunConfig cfg_;
    std::string out_;
};

}  // namespace dampe
