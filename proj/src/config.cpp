#include "hqcm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hqcm {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "learning_rate") learning_rate = to_double(key, value);
    else if (key == "weight_decay") weight_decay = to_double(key, value);
    else if (key == "clip_max_norm") clip_max_norm = to_double(key, value);
    else if (key == "lr_factor") lr_factor = to_double(key, value);
    else if (key == "lr_patience") lr_patience = to_int(key, value);
    else if (key == "lr_threshold") lr_threshold = to_double(key, value);
    else if (key == "early_stop_patience") early_stop_patience = to_int(key, value);
    else if (key == "max_epochs") max_epochs = to_int(key, value);
    else if (key == "batch_size") batch_size = to_int(key, value);
    else if (key == "qubits_per_circuit") qubits_per_circuit = to_int(key, value);
    else if (key == "circuit_depth") circuit_depth = to_int(key, value);
    else if (key == "parallel_circuits") parallel_circuits = to_int(key, value);
    else if (key == "alpha") alpha = to_double(key, value);
    else if (key == "beta") beta = to_double(key, value);
    else if (key == "zeta") zeta = to_double(key, value);
    else if (key == "gamma") gamma = to_double(key, value);
    else if (key == "dice_eps") dice_eps = to_double(key, value);
    else if (key == "image_size") image_size = to_int(key, value);
    else if (key == "num_classes") num_classes = to_int(key, value);
    else if (key == "reduction_ratio") reduction_ratio = to_int(key, value);
    else if (key == "variant") variant = variant_name(variant_from_name(value));
    else if (key == "augment") augment = to_bool(key, value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(value));
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) { return from_file(path, RunConfig{}); }

RunConfig RunConfig::from_file(const std::string& path, RunConfig base) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
    RunConfig cfg = base;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) + " of '" + path +
                                        "' is not `key = value`");
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

std::string RunConfig::to_string() const {
    std::ostringstream os;
    os << "learning_rate = " << learning_rate << "\n";
    os << "weight_decay = " << weight_decay << "\n";
    os << "clip_max_norm = " << clip_max_norm << "\n";
    os << "lr_factor = " << lr_factor << "\n";
    os << "lr_patience = " << lr_patience << "\n";
    os << "lr_threshold = " << lr_threshold << "\n";
    os << "early_stop_patience = " << early_stop_patience << "\n";
    os << "max_epochs = " << max_epochs << "\n";
    os << "batch_size = " << batch_size << "\n";
    os << "qubits_per_circuit = " << qubits_per_circuit << "\n";
    os << "circuit_depth = " << circuit_depth << "\n";
    os << "parallel_circuits = " << parallel_circuits << "\n";
    os << "alpha = " << alpha << "\n";
    os << "beta = " << beta << "\n";
    os << "zeta = " << zeta << "\n";
    os << "gamma = " << gamma << "\n";
    os << "dice_eps = " << dice_eps << "\n";
    os << "image_size = " << image_size << "\n";
    os << "num_classes = " << num_classes << "\n";
    os << "reduction_ratio = " << reduction_ratio << "\n";
    os << "variant = " << variant << "\n";
    os << "augment = " << (augment ? "true" : "false") << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

ModelConfig RunConfig::model_config() const {
    ModelConfig cfg;
    cfg.input_size = image_size;
    cfg.num_classes = num_classes;
    cfg.reduction_ratio = reduction_ratio;
    cfg.quantum.qubits = qubits_per_circuit;
    cfg.quantum.depth = circuit_depth;
    cfg.quantum.circuits = parallel_circuits;
    cfg.variant = variant_from_name(variant);
    return cfg;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.max_epochs = max_epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.weight_decay = weight_decay;
    cfg.clip_max_norm = clip_max_norm;
    cfg.lr_factor = lr_factor;
    cfg.lr_patience = lr_patience;
    cfg.lr_threshold = lr_threshold;
    cfg.early_stop_patience = early_stop_patience;
    cfg.loss = {alpha, beta, zeta, gamma, dice_eps};
    cfg.seed = seed;
    cfg.augment_train = augment;
    return cfg;
}

}  // namespace hqcm
