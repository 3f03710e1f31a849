#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ecoscale {

/// One multi-lead record. Samples are stored on disk as 32-bit floats and
/// widened to doubles in memory; generation casts through float so the
/// write -> read roundtrip is bit-exact against the in-memory values.
struct Record {
    uint32_t id = 0;
    uint32_t labels = 0;               // bit m set when class m applies
    std::vector<double> signal;        // leads * T, row-major [lead][t]
};

struct Dataset {
    int leads = 12;
    int T = 512;
    int num_classes = 6;
    std::vector<Record> records;

    size_t size() const { return records.size(); }
};

enum class Task { MultiLabel, Binary };

Task parse_task(const std::string& s);           // "ml" | "bin"
std::string task_name(Task t);

struct GenConfig {
    int num_records = 0;
    int leads = 12;
    int T = 512;
    int num_classes = 6;                         // latent waveform classes
    std::vector<int> class_scales{8, 16, 32, 64, 128, 224};  // burst spacing per class
    double noise_std = 0.35;
    Task task = Task::MultiLabel;
    double label_prob = 0.3;                     // independent presence probability
    uint64_t seed = 1;

    void validate() const;                       // throws std::invalid_argument
};

/// Width of the injected burst template, in samples.
int burst_template_width();
/// The burst template at unit amplitude scale (biphasic, zero-sum).
std::vector<double> burst_template();

/// Deterministic synthetic dataset. Each present class m injects a train of
/// three identical bursts spaced class_scales[m] samples apart at a random
/// phase on a random non-empty lead subset, on top of Gaussian noise. Labels
/// are exactly the injected classes (MultiLabel; all-zero label vectors are
/// rejection-resampled) or their any-class OR (Binary, single output class).
Dataset generate(const GenConfig& config);

/// Pinned binary format: magic "ECOS", u32 version=1, u32 record count,
/// u16 leads, u32 T, u16 M; per record u32 id, u32 label bit-mask,
/// leads*T little-endian 32-bit floats.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

struct SplitIds {
    std::vector<uint32_t> train, val, test;
};

/// Deterministic shuffle then floor-based partition; the remainder goes to
/// train. Fractions must sum to 1.
SplitIds split_ids(std::vector<uint32_t> ids, double f_train, double f_val, double f_test,
                   uint64_t seed);

/// Select the records whose ids are listed, in the listed order.
Dataset subset_by_ids(const Dataset& ds, const std::vector<uint32_t>& ids);

}  // namespace ecoscale
