#include "ecoscale/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "ecoscale/binio.hpp"
#include "ecoscale/rng.hpp"

namespace ecoscale {

Task parse_task(const std::string& s) {
    if (s == "ml") return Task::MultiLabel;
    if (s == "bin") return Task::Binary;
    throw std::invalid_argument("unknown task '" + s + "' (expected ml or bin)");
}

std::string task_name(Task t) { return t == Task::MultiLabel ? "ml" : "bin"; }

int burst_template_width() { return 7; }

std::vector<double> burst_template() {
    // Biphasic, zero-sum spike; amplitude chosen to sit clearly above the
    // default noise floor without saturating.
    return {0.3, 0.9, 1.5, 0.0, -1.5, -0.9, -0.3};
}

void GenConfig::validate() const {
    if (num_records < 1) throw std::invalid_argument("gen: num_records must be >= 1");
    if (leads < 1) throw std::invalid_argument("gen: leads must be >= 1");
    if (T < 1) throw std::invalid_argument("gen: T must be >= 1");
    if (num_classes < 1 || num_classes > 32)
        throw std::invalid_argument("gen: num_classes must be in [1, 32]");
    if (static_cast<int>(class_scales.size()) != num_classes)
        throw std::invalid_argument("gen: need one class_scale per class (" +
                                    std::to_string(num_classes) + ")");
    const int width = burst_template_width();
    for (size_t i = 0; i < class_scales.size(); ++i) {
        const int s = class_scales[i];
        if (s < width)
            throw std::invalid_argument("gen: class scale " + std::to_string(s) +
                                        " shorter than the burst template");
        // three bursts spaced s apart must fit inside the record
        if (2 * s + width > T)
            throw std::invalid_argument("gen: class scale " + std::to_string(s) +
                                        " does not fit in T=" + std::to_string(T) +
                                        " (needs 2*scale+" + std::to_string(width) + ")");
        for (size_t j = i + 1; j < class_scales.size(); ++j)
            if (class_scales[j] == s)
                throw std::invalid_argument("gen: class scales must be distinct");
    }
    if (noise_std < 0.0) throw std::invalid_argument("gen: noise_std must be >= 0");
    if (label_prob <= 0.0 || label_prob >= 1.0)
        throw std::invalid_argument("gen: label_prob must be in (0, 1)");
}

Dataset generate(const GenConfig& config) {
    config.validate();
    Dataset ds;
    ds.leads = config.leads;
    ds.T = config.T;
    ds.num_classes = (config.task == Task::Binary) ? 1 : config.num_classes;
    ds.records.reserve(static_cast<size_t>(config.num_records));

    Rng rng(config.seed);
    const std::vector<double> tmpl = burst_template();
    const int width = burst_template_width();

    for (int r = 0; r < config.num_records; ++r) {
        Record rec;
        rec.id = static_cast<uint32_t>(r);

        // 1) latent class presence; the ml task rejection-resamples all-zero draws
        uint32_t present = 0;
        for (;;) {
            present = 0;
            for (int m = 0; m < config.num_classes; ++m)
                if (rng.uniform() < config.label_prob) present |= (1u << m);
            if (present != 0 || config.task == Task::Binary) break;
        }
        rec.labels = (config.task == Task::Binary) ? (present != 0 ? 1u : 0u) : present;

        // 2) baseline noise over the whole record
        rec.signal.assign(static_cast<size_t>(config.leads) * config.T, 0.0);
        if (config.noise_std > 0.0)
            for (double& v : rec.signal) v = rng.normal() * config.noise_std;

        // 3) per present class (ascending), a three-burst train: equal energy
        //    per class, so burst spacing is the only discriminating cue
        for (int m = 0; m < config.num_classes; ++m) {
            if (!(present & (1u << m))) continue;
            const int scale = config.class_scales[m];
            const int max_phase = config.T - (2 * scale + width);
            const int phase = (max_phase > 0) ? rng.uniform_int(max_phase + 1) : 0;
            uint32_t lead_mask = 0;
            for (int l = 0; l < config.leads; ++l)
                if (rng.uniform() < 0.5) lead_mask |= (1u << l);
            if (lead_mask == 0) lead_mask = (1u << rng.uniform_int(config.leads));
            for (int l = 0; l < config.leads; ++l) {
                if (!(lead_mask & (1u << l))) continue;
                double* row = rec.signal.data() + static_cast<size_t>(l) * config.T;
                for (int burst = 0; burst < 3; ++burst) {
                    const int at = phase + burst * scale;
                    for (int j = 0; j < width; ++j) row[at + j] += tmpl[j];
                }
            }
        }

        // 4) quantize to the on-disk precision so roundtrips are bit-exact
        for (double& v : rec.signal) v = static_cast<double>(static_cast<float>(v));

        ds.records.push_back(std::move(rec));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// ECOS file format
// ---------------------------------------------------------------------------

namespace {
constexpr uint32_t kDatasetVersion = 1;
}

void write_dataset(const std::string& path, const Dataset& ds) {
    if (ds.records.size() > 0xffffffffull)
        throw std::invalid_argument("dataset too large for u32 record count");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write("ECOS", 4);
    binio::write_u32(os, kDatasetVersion);
    binio::write_u32(os, static_cast<uint32_t>(ds.records.size()));
    binio::write_u16(os, static_cast<uint16_t>(ds.leads));
    binio::write_u32(os, static_cast<uint32_t>(ds.T));
    binio::write_u16(os, static_cast<uint16_t>(ds.num_classes));
    const size_t samples = static_cast<size_t>(ds.leads) * ds.T;
    for (const Record& r : ds.records) {
        if (r.signal.size() != samples)
            throw std::invalid_argument("record " + std::to_string(r.id) +
                                        " sample count does not match header");
        binio::write_u32(os, r.id);
        binio::write_u32(os, r.labels);
        for (double v : r.signal) binio::write_f32(os, static_cast<float>(v));
    }
    if (!os) throw std::runtime_error("write failure on " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    const std::string what = "dataset file " + path;

    char magic[4];
    binio::read_bytes(is, magic, 4, what);
    if (std::string(magic, 4) != "ECOS")
        throw std::runtime_error(what + ": bad magic at byte 0 (expected ECOS)");
    const uint32_t version = binio::read_u32(is, what);
    if (version != kDatasetVersion)
        throw std::runtime_error(what + ": unsupported version " + std::to_string(version) +
                                 " at byte 4");
    const uint32_t count = binio::read_u32(is, what);
    Dataset ds;
    ds.leads = binio::read_u16(is, what);
    ds.T = static_cast<int>(binio::read_u32(is, what));
    ds.num_classes = binio::read_u16(is, what);
    if (ds.leads < 1 || ds.T < 1 || ds.num_classes < 1)
        throw std::runtime_error(what + ": bad geometry in header");

    const size_t samples = static_cast<size_t>(ds.leads) * ds.T;
    ds.records.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        Record r;
        r.id = binio::read_u32(is, what);
        r.labels = binio::read_u32(is, what);
        r.signal.resize(samples);
        for (size_t j = 0; j < samples; ++j)
            r.signal[j] = static_cast<double>(binio::read_f32(is, what));
        ds.records.push_back(std::move(r));
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        const std::streamoff at = is.tellg();
        throw std::runtime_error(what + ": trailing bytes at byte " + std::to_string(at));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

SplitIds split_ids(std::vector<uint32_t> ids, double f_train, double f_val, double f_test,
                   uint64_t seed) {
    if (ids.empty()) throw std::invalid_argument("split: empty id list");
    if (f_train < 0 || f_val < 0 || f_test < 0 ||
        std::fabs(f_train + f_val + f_test - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must be non-negative and sum to 1");

    Rng rng(seed);
    rng.shuffle(ids);

    const size_t n = ids.size();
    // tiny epsilon absorbs representation error (e.g. 2400 * 0.05 must be 120)
    const size_t n_train = static_cast<size_t>(std::floor(f_train * n + 1e-9));
    const size_t n_val = static_cast<size_t>(std::floor(f_val * n + 1e-9));
    const size_t n_test = static_cast<size_t>(std::floor(f_test * n + 1e-9));
    const size_t remainder = n - (n_train + n_val + n_test);

    SplitIds out;
    size_t i = 0;
    for (size_t k = 0; k < n_train + remainder; ++k) out.train.push_back(ids[i++]);
    for (size_t k = 0; k < n_val; ++k) out.val.push_back(ids[i++]);
    for (size_t k = 0; k < n_test; ++k) out.test.push_back(ids[i++]);
    return out;
}

Dataset subset_by_ids(const Dataset& ds, const std::vector<uint32_t>& ids) {
    std::unordered_map<uint32_t, size_t> index;
    for (size_t i = 0; i < ds.records.size(); ++i) index[ds.records[i].id] = i;
    Dataset out;
    out.leads = ds.leads;
    out.T = ds.T;
    out.num_classes = ds.num_classes;
    out.records.reserve(ids.size());
    for (uint32_t id : ids) {
        auto it = index.find(id);
        if (it == index.end())
            throw std::invalid_argument("subset: id " + std::to_string(id) + " not in dataset");
        out.records.push_back(ds.records[it->second]);
    }
    return out;
}

}  // namespace ecoscale
