#include "glue/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "glue/error.hpp"
#include "glue/util.hpp"

extern char** environ;

namespace glue {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void bad_value(const std::string& where, const std::string& key,
                            const std::string& value, const std::string& want) {
    throw ConfigError("config: " + where + " " + key + ": cannot parse '" + value +
                      "' as " + want);
}

std::uint64_t parse_u64(const std::string& where, const std::string& key,
                        const std::string& value) {
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0' ||
        value.find('-') != std::string::npos) {
        bad_value(where, key, value, "a non-negative integer");
    }
    return static_cast<std::uint64_t>(v);
}

std::size_t parse_size(const std::string& where, const std::string& key,
                       const std::string& value) {
    return static_cast<std::size_t>(parse_u64(where, key, value));
}

double parse_f64(const std::string& where, const std::string& key,
                 const std::string& value) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        bad_value(where, key, value, "a number");
    }
    return v;
}

bool parse_bool(const std::string& where, const std::string& key,
                const std::string& value) {
    std::string v = lower(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(where, key, value, "a boolean (true/false/1/0)");
}

std::vector<std::string> split_csv_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

IniFile::Section& section_of(IniFile& ini, const std::string& name) {
    for (auto& s : ini.sections) {
        if (s.name == name) return s;
    }
    ini.sections.push_back({name, {}});
    return ini.sections.back();
}

}  // namespace

const IniFile::Entry* IniFile::find(const std::string& section, const std::string& key) const {
    for (const auto& s : sections) {
        if (s.name != section) continue;
        for (const auto& e : s.entries) {
            if (e.key == key) return &e;
        }
    }
    return nullptr;
}

IniFile parse_ini(const std::string& text, const std::string& path_for_errors) {
    IniFile ini;
    IniFile::Section* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(path_for_errors, line_no, "unterminated section header");
            }
            std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) {
                throw ParseError(path_for_errors, line_no, "empty section name");
            }
            current = &section_of(ini, lower(name));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path_for_errors, line_no, "expected 'key = value'");
        }
        if (current == nullptr) {
            throw ParseError(path_for_errors, line_no, "key before any [section] header");
        }
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ParseError(path_for_errors, line_no, "empty key");
        }
        for (const auto& e : current->entries) {
            if (e.key == key) {
                throw ParseError(path_for_errors, line_no,
                                 "duplicate key '" + key + "' in section [" + current->name + "]");
            }
        }
        current->entries.push_back({key, value, line_no});
    }
    return ini;
}

void apply_env_overrides(IniFile& ini, const std::vector<std::string>& sections) {
    constexpr std::string_view prefix = "GLUE_";
    for (char** p = environ; p != nullptr && *p != nullptr; ++p) {
        std::string_view var(*p);
        if (var.substr(0, prefix.size()) != prefix) continue;
        std::size_t eq = var.find('=');
        if (eq == std::string_view::npos) continue;
        std::string_view name = var.substr(prefix.size(), eq - prefix.size());
        std::string value(var.substr(eq + 1));
        std::size_t us = name.find('_');
        if (us == std::string_view::npos || us == 0 || us + 1 >= name.size()) continue;
        std::string section = lower(std::string(name.substr(0, us)));
        std::string key = lower(std::string(name.substr(us + 1)));
        if (std::find(sections.begin(), sections.end(), section) == sections.end()) continue;
        auto& sec = section_of(ini, section);
        bool replaced = false;
        for (auto& e : sec.entries) {
            if (e.key == key) {
                e.value = value;
                replaced = true;
                break;
            }
        }
        if (!replaced) sec.entries.push_back({key, value, 0});
    }
}

// ---- Dataset manifest -------------------------------------------------------

DatasetManifest manifest_from_ini(const IniFile& ini, const std::string& path_for_errors) {
    DatasetManifest m;
    bool saw_train = false;
    bool saw_test = false;
    for (const auto& sec : ini.sections) {
        if (sec.name != "dataset") {
            throw ConfigError("config: unknown section [" + sec.name + "] in " +
                              path_for_errors + " (a dataset manifest has only [dataset])");
        }
        const std::string where = "[dataset]";
        for (const auto& e : sec.entries) {
            if (e.key == "kind") {
                m.kind = dataset_kind_from_string(e.value);
            } else if (e.key == "train") {
                m.train_csv = e.value;
                saw_train = true;
            } else if (e.key == "test") {
                m.test_csv = e.value;
                saw_test = true;
            } else if (e.key == "window") {
                m.window = parse_size(where, e.key, e.value);
            } else if (e.key == "anomaly_rate") {
                m.anomaly_rate = parse_f64(where, e.key, e.value);
            } else if (e.key == "downsample_block") {
                m.downsample_block = parse_size(where, e.key, e.value);
            } else if (e.key == "candidates") {
                m.candidates = e.value;
            } else {
                throw ConfigError("config: unknown key '" + e.key + "' in section [dataset] (" +
                                  path_for_errors + ")");
            }
        }
    }
    if (!saw_train || !saw_test) {
        throw ConfigError("config: manifest " + path_for_errors +
                          " must set [dataset] train and test paths");
    }
    if (m.window < 1) {
        throw ConfigError("config: [dataset] window must be at least 1");
    }
    if (m.anomaly_rate != 0.0 && !(m.anomaly_rate > 0.0 && m.anomaly_rate < 1.0)) {
        throw ConfigError("config: [dataset] anomaly_rate must lie strictly between 0 and 1");
    }
    if (m.downsample_block < 1) {
        throw ConfigError("config: [dataset] downsample_block must be at least 1");
    }
    return m;
}

DatasetManifest load_manifest(const std::string& path) {
    IniFile ini = parse_ini(read_text_file(path), path);
    apply_env_overrides(ini, {"dataset"});
    return manifest_from_ini(ini, path);
}

// ---- Run configuration -------------------------------------------------------

ModelHyper RunConfig::hyper(std::size_t n_sensors, std::size_t window) const {
    ModelHyper h;
    h.n_sensors = n_sensors;
    h.embed_dim = embed_dim;
    h.window = window;
    // A sensor has at most N-1 candidate neighbors; clamp so small datasets
    // work with the default k.
    h.top_k = n_sensors > 0 ? std::min(top_k, n_sensors - 1) : top_k;
    h.leaky_slope = leaky_slope;
    h.sigma_floor = sigma_floor;
    h.per_node_attention = per_node_attention;
    h.head_hidden = head_hidden;
    return h;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.epochs = epochs;
    t.lr = lr;
    t.beta1 = beta1;
    t.beta2 = beta2;
    t.batch_size = batch_size;
    t.seed = seed;
    t.head_mode = head_mode;
    t.refresh = refresh;
    t.shuffle = shuffle;
    t.grad_clip = grad_clip;
    t.threads = threads;
    return t;
}

AeConfig RunConfig::ae_config() const {
    AeConfig a;
    a.bottleneck = ae_bottleneck;
    a.hidden = ae_hidden;
    a.epochs = ae_epochs;
    a.batch_size = ae_batch;
    a.lr = ae_lr;
    a.seed = seed;
    return a;
}

RunConfig run_config_from_ini(const IniFile& ini, const std::string& path_for_errors) {
    RunConfig cfg;
    for (const auto& sec : ini.sections) {
        const std::string where = "[" + sec.name + "]";
        if (sec.name == "run") {
            for (const auto& e : sec.entries) {
                if (e.key == "manifest") {
                    cfg.manifest_path = e.value;
                } else if (e.key == "out_dir") {
                    cfg.out_dir = e.value;
                } else if (e.key == "seed") {
                    cfg.seed = parse_u64(where, e.key, e.value);
                } else if (e.key == "threads") {
                    cfg.threads = static_cast<unsigned>(parse_u64(where, e.key, e.value));
                } else if (e.key == "detect_rate") {
                    cfg.detect_rate = parse_f64(where, e.key, e.value);
                    if (cfg.detect_rate != 0.0 &&
                        !(cfg.detect_rate > 0.0 && cfg.detect_rate < 1.0)) {
                        throw ConfigError(
                            "config: [run] detect_rate must lie strictly between 0 and 1");
                    }
                } else {
                    throw ConfigError("config: unknown key '" + e.key + "' in section [run] (" +
                                      path_for_errors + ")");
                }
            }
        } else if (sec.name == "model") {
            for (const auto& e : sec.entries) {
                if (e.key == "embed_dim") {
                    cfg.embed_dim = parse_size(where, e.key, e.value);
                } else if (e.key == "top_k") {
                    cfg.top_k = parse_size(where, e.key, e.value);
                } else if (e.key == "head_mode") {
                    cfg.head_mode = head_mode_from_string(e.value);
                } else if (e.key == "leaky_slope") {
                    cfg.leaky_slope = parse_f64(where, e.key, e.value);
                } else if (e.key == "sigma_floor") {
                    cfg.sigma_floor = parse_f64(where, e.key, e.value);
                } else if (e.key == "per_node_attention") {
                    cfg.per_node_attention = parse_bool(where, e.key, e.value);
                } else if (e.key == "head_hidden") {
                    cfg.head_hidden = parse_size(where, e.key, e.value);
                } else {
                    throw ConfigError("config: unknown key '" + e.key + "' in section [model] (" +
                                      path_for_errors + ")");
                }
            }
        } else if (sec.name == "train") {
            for (const auto& e : sec.entries) {
                if (e.key == "epochs") {
                    cfg.epochs = parse_size(where, e.key, e.value);
                } else if (e.key == "lr") {
                    cfg.lr = parse_f64(where, e.key, e.value);
                } else if (e.key == "beta1") {
                    cfg.beta1 = parse_f64(where, e.key, e.value);
                } else if (e.key == "beta2") {
                    cfg.beta2 = parse_f64(where, e.key, e.value);
                } else if (e.key == "batch_size") {
                    cfg.batch_size = parse_size(where, e.key, e.value);
                } else if (e.key == "refresh") {
                    cfg.refresh = adjacency_refresh_from_string(e.value);
                } else if (e.key == "shuffle") {
                    cfg.shuffle = parse_bool(where, e.key, e.value);
                } else if (e.key == "grad_clip") {
                    cfg.grad_clip = parse_f64(where, e.key, e.value);
                } else {
                    throw ConfigError("config: unknown key '" + e.key + "' in section [train] (" +
                                      path_for_errors + ")");
                }
            }
        } else if (sec.name == "baselines") {
            for (const auto& e : sec.entries) {
                if (e.key == "models") {
                    cfg.baselines.clear();
                    for (const auto& name : split_csv_list(e.value)) {
                        cfg.baselines.push_back(baseline_kind_from_string(name));
                    }
                } else if (e.key == "pca_components") {
                    cfg.pca_components = parse_size(where, e.key, e.value);
                } else if (e.key == "knn_k") {
                    cfg.knn_k = parse_size(where, e.key, e.value);
                } else if (e.key == "ae_bottleneck") {
                    cfg.ae_bottleneck = parse_size(where, e.key, e.value);
                } else if (e.key == "ae_hidden") {
                    cfg.ae_hidden = parse_size(where, e.key, e.value);
                } else if (e.key == "ae_epochs") {
                    cfg.ae_epochs = parse_size(where, e.key, e.value);
                } else if (e.key == "ae_batch") {
                    cfg.ae_batch = parse_size(where, e.key, e.value);
                } else if (e.key == "ae_lr") {
                    cfg.ae_lr = parse_f64(where, e.key, e.value);
                } else {
                    throw ConfigError("config: unknown key '" + e.key +
                                      "' in section [baselines] (" + path_for_errors + ")");
                }
            }
        } else {
            throw ConfigError("config: unknown section [" + sec.name + "] in " +
                              path_for_errors);
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    IniFile ini = parse_ini(read_text_file(path), path);
    apply_env_overrides(ini, {"run", "model", "train", "baselines"});
    return run_config_from_ini(ini, path);
}

std::string serialize(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[run]\n";
    out << "manifest = " << cfg.manifest_path << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "detect_rate = " << format_double(cfg.detect_rate) << "\n";
    out << "\n[model]\n";
    out << "embed_dim = " << cfg.embed_dim << "\n";
    out << "top_k = " << cfg.top_k << "\n";
    out << "head_mode = " << to_string(cfg.head_mode) << "\n";
    out << "leaky_slope = " << format_double(cfg.leaky_slope) << "\n";
    out << "sigma_floor = " << format_double(cfg.sigma_floor) << "\n";
    out << "per_node_attention = " << (cfg.per_node_attention ? "true" : "false") << "\n";
    out << "head_hidden = " << cfg.head_hidden << "\n";
    out << "\n[train]\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "lr = " << format_double(cfg.lr) << "\n";
    out << "beta1 = " << format_double(cfg.beta1) << "\n";
    out << "beta2 = " << format_double(cfg.beta2) << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "refresh = " << to_string(cfg.refresh) << "\n";
    out << "shuffle = " << (cfg.shuffle ? "true" : "false") << "\n";
    out << "grad_clip = " << format_double(cfg.grad_clip) << "\n";
    out << "\n[baselines]\n";
    out << "models = ";
    for (std::size_t i = 0; i < cfg.baselines.size(); ++i) {
        if (i > 0) out << ",";
        out << to_string(cfg.baselines[i]);
    }
    out << "\n";
    out << "pca_components = " << cfg.pca_components << "\n";
    out << "knn_k = " << cfg.knn_k << "\n";
    out << "ae_bottleneck = " << cfg.ae_bottleneck << "\n";
    out << "ae_hidden = " << cfg.ae_hidden << "\n";
    out << "ae_epochs = " << cfg.ae_epochs << "\n";
    out << "ae_batch = " << cfg.ae_batch << "\n";
    out << "ae_lr = " << format_double(cfg.ae_lr) << "\n";
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    return to_hex(fnv1a64(serialize(cfg)));
}

}  // namespace glue
