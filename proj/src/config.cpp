#include "ecoscale/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ecoscale {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + msg);
}

long long to_int(const std::string& origin, int line, const std::string& key,
                 const std::string& v) {
    try {
        size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        fail(origin, line, "key '" + key + "' needs an integer, got '" + v + "'");
    }
}

double to_real(const std::string& origin, int line, const std::string& key,
               const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        fail(origin, line, "key '" + key + "' needs a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& origin, int line, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin, line, "key '" + key + "' needs true/false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& origin, int line, const std::string& key,
                             const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(origin, line, "key '" + key + "' has an empty list entry");
        out.push_back(static_cast<int>(to_int(origin, line, key, item)));
    }
    if (out.empty()) fail(origin, line, "key '" + key + "' needs a comma-separated list");
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::vector<int> stage_blocks, stage_channels, stage_strides;
    bool have_blocks = false, have_channels = false, have_strides = false;

    std::istringstream is(text);
    std::string raw;
    std::string section;  // empty = global scope
    std::set<std::string> seen;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, line, "unterminated section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "model" && section != "train" && section != "data")
                fail(origin, line, "unknown section [" + section + "]");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos) fail(origin, line, "expected key=value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(origin, line, "empty key");
        if (value.empty()) fail(origin, line, "key '" + key + "' has no value");
        const std::string qualified = section + "." + key;
        if (!seen.insert(qualified).second)
            fail(origin, line, "duplicate key '" + key + "' in [" + section + "]");

        if (section.empty()) {
            if (key == "seed") {
                cfg.seed = static_cast<uint64_t>(to_int(origin, line, key, value));
            } else {
                fail(origin, line, "unknown global key '" + key + "' (only 'seed' may appear before sections)");
            }
        } else if (section == "model") {
            if (key == "leads") cfg.model.leads = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "input_length") cfg.model.input_length = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "num_classes") cfg.model.num_classes = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "stem_channels") cfg.model.stem.out_channels = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "stem_kernel") cfg.model.stem.kernel = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "stem_stride") cfg.model.stem.stride = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "pool_kernel") cfg.model.stem.pool_kernel = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "pool_stride") cfg.model.stem.pool_stride = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "pool_pad") cfg.model.stem.pool_pad = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "stage_blocks") { stage_blocks = to_int_list(origin, line, key, value); have_blocks = true; }
            else if (key == "stage_channels") { stage_channels = to_int_list(origin, line, key, value); have_channels = true; }
            else if (key == "stage_strides") { stage_strides = to_int_list(origin, line, key, value); have_strides = true; }
            else if (key == "variant") {
                try { cfg.model.variant = parse_variant(value); }
                catch (const std::exception& e) { fail(origin, line, e.what()); }
            }
            else if (key == "initial_cover") cfg.model.initial_cover = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "strict_coverage") cfg.model.strict_coverage = to_bool(origin, line, key, value);
            else fail(origin, line, "unknown key '" + key + "' in [model]");
        } else if (section == "train") {
            if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "epochs") cfg.train.epochs = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "lr_init") cfg.train.lr_init = to_real(origin, line, key, value);
            else if (key == "lr_final") cfg.train.lr_final = to_real(origin, line, key, value);
            else if (key == "weight_decay") cfg.train.weight_decay = to_real(origin, line, key, value);
            else if (key == "beta1") cfg.train.beta1 = to_real(origin, line, key, value);
            else if (key == "beta2") cfg.train.beta2 = to_real(origin, line, key, value);
            else if (key == "epsilon") cfg.train.epsilon = to_real(origin, line, key, value);
            else fail(origin, line, "unknown key '" + key + "' in [train]");
        } else {  // data
            if (key == "num_records") cfg.data.num_records = static_cast<int>(to_int(origin, line, key, value));
            else if (key == "noise_std") cfg.data.noise_std = to_real(origin, line, key, value);
            else if (key == "task") {
                try { cfg.data.task = parse_task(value); }
                catch (const std::exception& e) { fail(origin, line, e.what()); }
            }
            else if (key == "label_prob") cfg.data.label_prob = to_real(origin, line, key, value);
            else if (key == "class_scales") cfg.data.class_scales = to_int_list(origin, line, key, value);
            else fail(origin, line, "unknown key '" + key + "' in [data]");
        }
    }

    // Assemble stages
    if (!have_blocks || !have_channels)
        throw std::invalid_argument(origin + ": [model] requires stage_blocks and stage_channels");
    if (stage_blocks.size() != stage_channels.size())
        throw std::invalid_argument(origin + ": stage_blocks and stage_channels differ in length");
    if (!have_strides) {
        stage_strides.assign(stage_blocks.size(), 2);
        stage_strides[0] = 1;  // default pattern: stride 1, then 2 per stage
    }
    if (stage_strides.size() != stage_blocks.size())
        throw std::invalid_argument(origin + ": stage_strides length does not match stage_blocks");
    cfg.model.stages.clear();
    for (size_t i = 0; i < stage_blocks.size(); ++i)
        cfg.model.stages.push_back({stage_blocks[i], stage_channels[i], stage_strides[i]});

    // One-seed policy: every stage of the run derives from the global seed.
    cfg.train.seed = cfg.shuffle_seed();
    cfg.data.seed = cfg.gen_seed();
    // The dataset geometry mirrors the model, one source of truth per file.
    cfg.data.leads = cfg.model.leads;
    cfg.data.T = cfg.model.input_length;
    cfg.data.num_classes = static_cast<int>(cfg.data.class_scales.size());

    const int label_dim = (cfg.data.task == Task::Binary) ? 1 : cfg.data.num_classes;
    if (cfg.model.num_classes != label_dim)
        throw std::invalid_argument(origin + ": [model] num_classes=" +
                                    std::to_string(cfg.model.num_classes) + " but the " +
                                    task_name(cfg.data.task) + " task produces " +
                                    std::to_string(label_dim) + " label(s)");

    cfg.model.validate();
    cfg.train.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string desk_config_text() {
    return R"(# Desk-scale reference run: small enough to train on a laptop CPU in minutes.
seed = 7

[model]
leads = 12
input_length = 512
num_classes = 6
stem_channels = 8
stage_blocks = 1,1,1
stage_channels = 8,16,32
stage_strides = 1,2,2
initial_cover = 128
variant = full

[train]
batch_size = 64
epochs = 20
lr_init = 2e-3
lr_final = 1e-5
weight_decay = 0.01

[data]
num_records = 2400
noise_std = 0.35
task = ml
label_prob = 0.3
class_scales = 8,16,32,64,128,224
)";
}

std::string full_size_config_text() {
    return R"(# Full-size reference architecture for complexity reporting.
seed = 1

[model]
leads = 12
input_length = 4096
num_classes = 6
stem_channels = 64
stage_blocks = 3,4,6,3
stage_channels = 64,128,256,512
stage_strides = 1,2,2,2
initial_cover = 64
variant = full

[train]
batch_size = 64
epochs = 50
lr_init = 1e-4
lr_final = 1e-6
weight_decay = 0.01

[data]
num_records = 20000
noise_std = 0.35
task = ml
label_prob = 0.3
class_scales = 64,128,256,512,1024,1792
)";
}

}  // namespace ecoscale
