#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

#include "hqcm/model.hpp"

namespace hqcm {

namespace {

constexpr char kMagic[4] = {'H', 'Q', 'C', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

template <typename T>
constexpr std::uint8_t dtype_tag() {
    return std::is_same_v<T, float> ? 0 : 1;
}

// Payloads are written element-by-element as little-endian IEEE754 so the
// format does not depend on host endianness.
template <typename T>
void write_payload(std::ostream& os, const std::vector<T>& data) {
    for (T v : data) {
        if constexpr (std::is_same_v<T, float>) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            write_u32(os, bits);
        } else {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            write_u32(os, static_cast<std::uint32_t>(bits));
            write_u32(os, static_cast<std::uint32_t>(bits >> 32));
        }
    }
}

struct Record {
    std::uint8_t dtype = 0;
    std::vector<int> shape;
    std::vector<double> values;  // widened on read; narrowing is exact for tag 0

    template <typename T>
    Tensor<T> as_tensor() const {
        Tensor<T> t(shape);
        for (std::size_t i = 0; i < values.size(); ++i) t.data[i] = static_cast<T>(values[i]);
        return t;
    }
};

std::map<std::string, Record> read_records(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    std::map<std::string, Record> records;
    for (;;) {
        int peek = is.peek();
        if (peek == std::char_traits<char>::eof()) break;
        const std::uint32_t name_len = read_u32(is);
        if (name_len == 0 || name_len > 4096) throw std::runtime_error("checkpoint: implausible name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("checkpoint: truncated file");
        Record rec;
        char tag;
        is.read(&tag, 1);
        if (!is) throw std::runtime_error("checkpoint: truncated file");
        rec.dtype = static_cast<std::uint8_t>(tag);
        if (rec.dtype > 1) throw std::runtime_error("checkpoint: unknown dtype tag");
        const std::uint32_t rank = read_u32(is);
        if (rank > 8) throw std::runtime_error("checkpoint: implausible rank");
        std::int64_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint32_t d = read_u32(is);
            rec.shape.push_back(static_cast<int>(d));
            count *= d;
        }
        rec.values.resize(static_cast<std::size_t>(count));
        for (auto& v : rec.values) {
            if (rec.dtype == 0) {
                std::uint32_t bits = read_u32(is);
                float f;
                std::memcpy(&f, &bits, 4);
                v = f;
            } else {
                std::uint64_t lo = read_u32(is);
                std::uint64_t hi = read_u32(is);
                std::uint64_t bits = lo | (hi << 32);
                double d;
                std::memcpy(&d, &bits, 8);
                v = d;
            }
        }
        records[name] = std::move(rec);
    }
    return records;
}

void write_config_scalar(std::ostream& os, const std::string& name, double value) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(1));  // f64
    write_u32(os, 1);
    write_u32(os, 1);
    std::vector<double> v{value};
    write_payload(os, v);
}

double config_scalar(const std::map<std::string, Record>& records, const std::string& name) {
    auto it = records.find(name);
    if (it == records.end())
        throw std::runtime_error("checkpoint: missing config record '" + name + "'");
    if (it->second.values.size() != 1)
        throw std::runtime_error("checkpoint: config record '" + name + "' is not scalar");
    return it->second.values[0];
}

ModelConfig config_from_records(const std::map<std::string, Record>& records) {
    ModelConfig cfg;
    cfg.input_size = static_cast<int>(config_scalar(records, "config/input_size"));
    cfg.num_classes = static_cast<int>(config_scalar(records, "config/num_classes"));
    auto it = records.find("config/conv_channels");
    if (it == records.end() || it->second.values.size() != 3)
        throw std::runtime_error("checkpoint: missing config record 'config/conv_channels'");
    for (int i = 0; i < 3; ++i)
        cfg.conv_channels[static_cast<std::size_t>(i)] = static_cast<int>(it->second.values[static_cast<std::size_t>(i)]);
    cfg.reduction_ratio = static_cast<int>(config_scalar(records, "config/reduction_ratio"));
    cfg.quantum.qubits = static_cast<int>(config_scalar(records, "config/qubits"));
    cfg.quantum.depth = static_cast<int>(config_scalar(records, "config/depth"));
    cfg.quantum.circuits = static_cast<int>(config_scalar(records, "config/circuits"));
    cfg.variant = config_scalar(records, "config/variant") == 0.0 ? Variant::hybrid : Variant::classical;
    return cfg;
}

}  // namespace

template <typename T>
void save_checkpoint(Model<T>& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    os.write(kMagic, 4);
    write_u32(os, kVersion);

    const ModelConfig& cfg = model.config();
    write_config_scalar(os, "config/input_size", cfg.input_size);
    write_config_scalar(os, "config/num_classes", cfg.num_classes);
    {
        const std::string name = "config/conv_channels";
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        os.put(static_cast<char>(1));
        write_u32(os, 1);
        write_u32(os, 3);
        std::vector<double> v{static_cast<double>(cfg.conv_channels[0]),
                              static_cast<double>(cfg.conv_channels[1]),
                              static_cast<double>(cfg.conv_channels[2])};
        write_payload(os, v);
    }
    write_config_scalar(os, "config/reduction_ratio", cfg.reduction_ratio);
    write_config_scalar(os, "config/qubits", cfg.quantum.qubits);
    write_config_scalar(os, "config/depth", cfg.quantum.depth);
    write_config_scalar(os, "config/circuits", cfg.quantum.circuits);
    write_config_scalar(os, "config/variant", cfg.variant == Variant::hybrid ? 0.0 : 1.0);

    for (const auto& entry : model.state_entries()) {
        write_u32(os, static_cast<std::uint32_t>(entry.name.size()));
        os.write(entry.name.data(), static_cast<std::streamsize>(entry.name.size()));
        os.put(static_cast<char>(dtype_tag<T>()));
        write_u32(os, static_cast<std::uint32_t>(entry.tensor->rank()));
        for (int d : entry.tensor->shape) write_u32(os, static_cast<std::uint32_t>(d));
        write_payload(os, entry.tensor->data);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

template <typename T>
void load_checkpoint_into(Model<T>& model, const std::string& path) {
    const auto records = read_records(path);
    for (auto& entry : model.state_entries()) {
        auto it = records.find(entry.name);
        if (it == records.end())
            throw std::runtime_error("checkpoint: missing tensor '" + entry.name + "' in '" + path + "'");
        if (it->second.shape != entry.tensor->shape)
            throw std::runtime_error("checkpoint: shape mismatch for '" + entry.name + "': file has " +
                                     shape_str(it->second.shape) + ", model expects " +
                                     shape_str(entry.tensor->shape));
        *entry.tensor = it->second.template as_tensor<T>();
    }
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
    const auto records = read_records(path);
    Model<T> model(config_from_records(records));
    load_checkpoint_into(model, path);
    return model;
}

template void save_checkpoint<float>(Model<float>&, const std::string&);
template void save_checkpoint<double>(Model<double>&, const std::string&);
template Model<float> load_checkpoint<float>(const std::string&);
template Model<double> load_checkpoint<double>(const std::string&);
template void load_checkpoint_into<float>(Model<float>&, const std::string&);
template void load_checkpoint_into<double>(Model<double>&, const std::string&);

}  // namespace hqcm
