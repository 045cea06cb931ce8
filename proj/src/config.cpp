#include "dampe/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dampe/error.hpp"

namespace dampe {

RunConfig RunConfig::defaults() {
    RunConfig c;
    auto& v = c.values_;
    v["seed"] = "7";

    v["data.n_proteins"] = "300";
    v["data.n_terms"] = "40";
    v["data.d_seq"] = "16";
    v["data.d_struc"] = "16";
    v["data.latent_dim"] = "8";
    v["data.n_clusters"] = "5";
    v["data.seq_noise"] = "0.05";
    v["data.struc_noise"] = "0.05";
    v["data.struc_scale"] = "3.0";
    v["data.map_kind"] = "permutation";
    v["data.ppi_homophily"] = "5.0";
    v["data.ppi_cross_density"] = "0.003";
    v["data.terms_per_cluster"] = "1";
    v["data.label_noise"] = "0.1";
    v["data.dag_roots"] = "4";
    v["data.dag_second_parent"] = "0.5";
    v["data.d_go"] = "8";
    v["data.dir"] = "";  // empty: generate synthetically under <out>/data

    v["ot.epsilon"] = "0.001";
    v["ot.cost_tol"] = "1e-6";
    v["ot.max_iter"] = "1000000";
    v["ot.normalize_projection"] = "false";

    v["diffusion.T"] = "50";
    v["diffusion.shift"] = "0.008";

    v["model.d_cond"] = "64";
    v["model.moe_experts"] = "4";
    v["model.d_model"] = "64";
    v["model.d_edge"] = "32";
    v["model.heads"] = "4";
    v["model.layers"] = "2";
    v["model.clf_hidden"] = "128";

    v["train.steps"] = "400";
    v["train.batch_size"] = "8";
    v["train.learning_rate"] = "2e-4";
    v["train.weight_decay"] = "1e-12";
    v["train.cond_drop_prob"] = "0.1";
    v["train.hops"] = "2";
    v["train.fanout_ppi"] = "6";
    v["train.fanout_go"] = "6";
    v["train.fanout_anno"] = "6";
    v["train.node_cap"] = "32";
    v["train.checkpoint_every"] = "200";
    v["train.use_cgg"] = "true";
    v["train.use_alignment"] = "true";

    v["finetune.steps"] = "300";
    v["finetune.batch_size"] = "32";
    v["finetune.peak_lr"] = "2e-4";
    v["finetune.weight_decay"] = "1e-4";
    v["finetune.warmup_fraction"] = "0.1";

    v["eval.cfg_w"] = "0.0";

    v["bench.batch_size"] = "64";
    v["bench.repeats"] = "100";
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig c = defaults();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        c.set(line.substr(start, eq - start), line.substr(eq + 1));
    }
    return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

double RunConfig::get_real(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const double v = std::stod(get(key), &pos);
        if (pos != get(key).size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a real number: " + get(key));
    }
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(get(key), &pos);
        if (pos != get(key).size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an integer: " + get(key));
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::int64_t v = get_int(key);
    if (v < 0) throw ConfigError("config key " + key + " must be non-negative");
    return static_cast<std::uint64_t>(v);
}

bool RunConfig::get_flag(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key " + key + " is not a flag: " + v);
}

std::string RunConfig::resolved_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
    return os.str();
}

void RunConfig::write_resolved(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write resolved config: " + path);
    out << resolved_text();
}

std::string RunConfig::stage_hash(const std::vector<std::string>& prefixes) const {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : values_) {
        bool match = k == "seed";
        for (const std::string& p : prefixes)
            if (!match && k.rfind(p, 0) == 0) match = true;
        if (!match) continue;
        feed(k);
        feed("=");
        feed(v);
        feed("\n");
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dampe
