#include "recigraph/config.hpp"

#include <fstream>
#include <sstream>

#include "recigraph/graph_io.hpp"
#include "recigraph/sampler.hpp"

namespace recigraph {

namespace {

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw DataError("config: bad boolean '" + v + "' for " + key);
}

double parse_real(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config: bad number '" + v + "' for " + key);
    }
}

std::uint64_t parse_uint(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config: bad integer '" + v + "' for " + key);
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw DataError("config: lr must be > 0");
    if (hidden < 1) throw DataError("config: hidden must be >= 1");
    if (batch < 1) throw DataError("config: batch must be >= 1");
    if (epochs < 1) throw DataError("config: epochs must be >= 1");
    if (lambda < 0.0) throw DataError("config: lambda must be >= 0");
    if (top_p < 1) throw DataError("config: top_p must be >= 1");
    if (n_walks < 1) throw DataError("config: n_walks must be >= 1");
    if (layers < 1) throw DataError("config: layers must be >= 1");
    attack.validate();
    MetaPath::parse(metapath);
    double total = 0.0;
    for (const double f : split) {
        if (f <= 0.0) throw DataError("config: split fractions must be positive");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DataError("config: split fractions must sum to 1");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
    std::map<std::string, std::string> kv;
    kv["task"] = to_string(task);
    kv["lr"] = format_double(lr);
    kv["hidden"] = std::to_string(hidden);
    kv["batch"] = std::to_string(batch);
    kv["epochs"] = std::to_string(epochs);
    kv["lambda"] = format_double(lambda);
    kv["metapath"] = metapath;
    kv["top_p"] = std::to_string(top_p);
    kv["n_walks"] = std::to_string(n_walks);
    kv["attack_bound"] = format_double(attack.bound);
    kv["attack_step"] = format_double(attack.step);
    kv["attack_iters"] = std::to_string(attack.iters);
    kv["attack_random_start"] = attack.random_start ? "1" : "0";
    kv["split_train"] = format_double(split[0]);
    kv["split_val"] = format_double(split[1]);
    kv["split_test"] = format_double(split[2]);
    kv["seed_graph"] = std::to_string(seed_graph);
    kv["seed_model"] = std::to_string(seed_model);
    kv["seed_split"] = std::to_string(seed_split);
    kv["seed_sampler"] = std::to_string(seed_sampler);
    kv["switch_ns"] = switches.neighbor_sampling ? "1" : "0";
    kv["switch_na"] = switches.node_aggregation ? "1" : "0";
    kv["switch_ca"] = switches.cross_modal ? "1" : "0";
    kv["switch_ra"] = switches.relation_attention ? "1" : "0";
    kv["switch_al"] = switches.adversarial ? "1" : "0";
    kv["layers"] = std::to_string(layers);
    kv["pool"] = to_string(pool);
    kv["share_weights"] = share_weights ? "1" : "0";
    kv["sample_cache"] = sample_cache;
    return kv;
}

void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "task") cfg.task = task_from(value);
    else if (key == "lr") cfg.lr = parse_real(value, key);
    else if (key == "hidden") cfg.hidden = parse_uint(value, key);
    else if (key == "batch") cfg.batch = parse_uint(value, key);
    else if (key == "epochs") cfg.epochs = parse_uint(value, key);
    else if (key == "lambda") cfg.lambda = parse_real(value, key);
    else if (key == "metapath") cfg.metapath = value;
    else if (key == "top_p") cfg.top_p = parse_uint(value, key);
    else if (key == "n_walks") cfg.n_walks = parse_uint(value, key);
    else if (key == "attack_bound") cfg.attack.bound = parse_real(value, key);
    else if (key == "attack_step") cfg.attack.step = parse_real(value, key);
    else if (key == "attack_iters") cfg.attack.iters = parse_uint(value, key);
    else if (key == "attack_random_start") cfg.attack.random_start = parse_bool(value, key);
    else if (key == "split_train") cfg.split[0] = parse_real(value, key);
    else if (key == "split_val") cfg.split[1] = parse_real(value, key);
    else if (key == "split_test") cfg.split[2] = parse_real(value, key);
    else if (key == "seed_graph") cfg.seed_graph = parse_uint(value, key);
    else if (key == "seed_model") cfg.seed_model = parse_uint(value, key);
    else if (key == "seed_split") cfg.seed_split = parse_uint(value, key);
    else if (key == "seed_sampler") cfg.seed_sampler = parse_uint(value, key);
    else if (key == "switch_ns") cfg.switches.neighbor_sampling = parse_bool(value, key);
    else if (key == "switch_na") cfg.switches.node_aggregation = parse_bool(value, key);
    else if (key == "switch_ca") cfg.switches.cross_modal = parse_bool(value, key);
    else if (key == "switch_ra") cfg.switches.relation_attention = parse_bool(value, key);
    else if (key == "switch_al") cfg.switches.adversarial = parse_bool(value, key);
    else if (key == "layers") cfg.layers = parse_uint(value, key);
    else if (key == "pool") cfg.pool = pool_from(value);
    else if (key == "share_weights") cfg.share_weights = parse_bool(value, key);
    else if (key == "sample_cache") cfg.sample_cache = value;
    else throw DataError("config: unknown key '" + key + "'");
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
    TrainConfig cfg;
    for (const auto& [key, value] : kv) apply_override(cfg, key, value);
    cfg.validate();
    return cfg;
}

std::string TrainConfig::serialize() const {
    std::string out;
    for (const auto& [key, value] : to_map()) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

TrainConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open config " + file.string());
    TrainConfig cfg;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw DataError(file.filename().string() + ":" + std::to_string(number) +
                            ": expected key = value");
        }
        try {
            apply_override(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const DataError& e) {
            throw DataError(file.filename().string() + ":" + std::to_string(number) + ": " +
                            e.what());
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace recigraph
