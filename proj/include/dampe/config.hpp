#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dampe {

/// Flat key=value run configuration with a closed key registry: unknown keys
/// are rejected, every run can emit a resolved snapshot, and a stable hash of
/// the resolved values content-addresses stage outputs.
class RunConfig {
public:
    /// Registry defaults (sections: data.*, ot.*, diffusion.*, model.*,
    /// train.*, finetune.*, eval.*, bench.*, seed).
    static RunConfig defaults();

    /// Parses `key=value` lines ('#' comments and blank lines skipped) on top
    /// of the defaults.
    static RunConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);  // rejects unknown keys

    const std::string& get(const std::string& key) const;
    double get_real(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_flag(const std::string& key) const;

    /// Sorted key=value snapshot that fully determines the run.
    std::string resolved_text() const;
    void write_resolved(const std::string& path) const;

    /// FNV-1a hash of the resolved text restricted to keys with one of the
    /// given prefixes (plus "seed"), as a hex string.
    std::string stage_hash(const std::vector<std::string>& prefixes) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace dampe
