#include "hqcm/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace hqcm {

// ---------------------------------------------------------------- PGM I/O

namespace {

int read_pgm_token(std::istream& is, const std::string& path) {
    // skip whitespace and '#' comment lines
    for (;;) {
        int c = is.peek();
        if (c == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(is >> value)) throw std::runtime_error("pgm: malformed header in '" + path + "'");
    return value;
}

}  // namespace

PgmImage read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("pgm: cannot open '" + path + "'");
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    if (m0 != 'P' || m1 != '5')
        throw std::runtime_error("pgm: '" + path + "' is not a binary PGM (P5)");
    PgmImage img;
    img.width = read_pgm_token(is, path);
    img.height = read_pgm_token(is, path);
    const int maxval = read_pgm_token(is, path);
    if (img.width < 1 || img.height < 1 || maxval != 255)
        throw std::runtime_error("pgm: unsupported dimensions or maxval in '" + path + "'");
    is.get();  // single whitespace after maxval
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!is) throw std::runtime_error("pgm: truncated pixel data in '" + path + "'");
    return img;
}

void write_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("pgm: cannot write '" + path + "'");
    os << "P5\n" << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!os) throw std::runtime_error("pgm: write failed for '" + path + "'");
}

// ----------------------------------------------------------------- dataset

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<std::size_t> Dataset::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == split) out.push_back(i);
    return out;
}

std::vector<int> Dataset::labels(Split split) const {
    std::vector<int> out;
    for (const auto& s : samples)
        if (s.split == split) out.push_back(s.label);
    return out;
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("manifest: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != "image,mask,label,split")
        throw std::runtime_error("manifest: '" + path + "' missing `image,mask,label,split` header");
    std::vector<ManifestRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string image, mask, label, split;
        if (!std::getline(ss, image, ',') || !std::getline(ss, mask, ',') ||
            !std::getline(ss, label, ',') || !std::getline(ss, split, ','))
            throw std::runtime_error("manifest: malformed line " + std::to_string(lineno) + " in '" + path + "'");
        rows.push_back({image, mask, std::stoi(label), split_from_name(split)});
    }
    return rows;
}

void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("manifest: cannot write '" + path + "'");
    os << "image,mask,label,split\n";
    for (const auto& r : rows)
        os << r.image_path << "," << r.mask_path << "," << r.label << "," << split_name(r.split) << "\n";
}

// ------------------------------------------------------------- generation

namespace {

struct Canvas {
    int size;
    std::vector<double> image;
    std::vector<std::uint8_t> mask;

    explicit Canvas(int s) : size(s), image(static_cast<std::size_t>(s) * s, 0.0), mask(static_cast<std::size_t>(s) * s, 0) {}

    double& at(int h, int w) { return image[static_cast<std::size_t>(h) * size + w]; }
    std::uint8_t& mask_at(int h, int w) { return mask[static_cast<std::size_t>(h) * size + w]; }
};

void paint_blob(Canvas& canvas, double ch, double cw, double radius, double intensity, bool lesion) {
    const int s = canvas.size;
    for (int h = 0; h < s; ++h)
        for (int w = 0; w < s; ++w) {
            const double dh = h - ch, dw = w - cw;
            if (dh * dh + dw * dw <= radius * radius) {
                canvas.at(h, w) = std::max(canvas.at(h, w), intensity);
                if (lesion) canvas.mask_at(h, w) = 1;
            }
        }
}

// Textured ellipse standing in for brain tissue, centered with mild jitter.
void paint_brain(Canvas& canvas, Pcg32& rng) {
    const int s = canvas.size;
    const double cy = s / 2.0 + rng.uniform(-0.03, 0.03) * s;
    const double cx = s / 2.0 + rng.uniform(-0.03, 0.03) * s;
    const double ay = rng.uniform(0.34, 0.42) * s;
    const double ax = rng.uniform(0.30, 0.40) * s;
    const double base = rng.uniform(0.30, 0.42);
    for (int h = 0; h < s; ++h)
        for (int w = 0; w < s; ++w) {
            const double dy = (h - cy) / ay, dx = (w - cx) / ax;
            const double r2 = dy * dy + dx * dx;
            if (r2 <= 1.0) {
                // low-frequency ripple plus point noise as texture
                double tex = 0.06 * std::sin(h * 0.9 + w * 0.5) * std::cos(w * 0.7 - h * 0.3);
                canvas.at(h, w) = base + tex + rng.uniform(-0.03, 0.03) + 0.1 * (1.0 - r2);
            }
        }
}

void paint_lesion(Canvas& canvas, int label, Pcg32& rng) {
    const int s = canvas.size;
    const double c = s / 2.0;
    switch (label) {
        case 1: {  // bright blob away from the center
            const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double dist = rng.uniform(0.18, 0.26) * s;
            const double radius = rng.uniform(0.13, 0.18) * s;
            paint_blob(canvas, c + dist * std::sin(angle), c + dist * std::cos(angle), radius,
                       rng.uniform(0.92, 1.0), true);
            break;
        }
        case 2: {  // mid-intensity multi-lobe cluster
            const int lobes = 2 + static_cast<int>(rng.next_below(2));
            const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double dist = rng.uniform(0.05, 0.18) * s;
            const double ach = c + dist * std::sin(angle), acw = c + dist * std::cos(angle);
            for (int i = 0; i < lobes; ++i) {
                const double off = rng.uniform(0.0, 0.10) * s;
                const double oa = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                paint_blob(canvas, ach + off * std::sin(oa), acw + off * std::cos(oa),
                           rng.uniform(0.10, 0.14) * s, rng.uniform(0.55, 0.68), true);
            }
            break;
        }
        case 3: {  // small bright blob near the center
            const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double dist = rng.uniform(0.0, 0.08) * s;
            paint_blob(canvas, c + dist * std::sin(angle), c + dist * std::cos(angle),
                       rng.uniform(0.09, 0.12) * s, rng.uniform(0.92, 1.0), true);
            break;
        }
        default: break;  // class 0: no lesion
    }
}

std::string numbered(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%05d.pgm", prefix, i);
    return buf;
}

// Per-class split sizes via cumulative rounding so the global counts track
// 70/15/15 exactly and every class stays within one sample of its quota.
std::vector<std::array<int, 3>> split_quotas(const std::vector<int>& class_counts) {
    std::vector<std::array<int, 3>> quotas;
    double cum = 0;
    int prev_val = 0, prev_valtest = 0;
    auto roundi = [](double x) { return static_cast<int>(std::floor(x + 0.5)); };
    for (int m : class_counts) {
        cum += m;
        const int val_cum = roundi(0.15 * cum);
        const int valtest_cum = roundi(0.30 * cum);
        const int n_val = val_cum - prev_val;
        const int n_test = (valtest_cum - prev_valtest) - n_val;
        prev_val = val_cum;
        prev_valtest = valtest_cum;
        quotas.push_back({m - n_val - n_test, n_val, n_test});
    }
    return quotas;
}

}  // namespace

SyntheticSummary generate_synthetic(int n, int size, std::uint64_t seed, const std::string& out_dir) {
    if (n < 40) throw std::invalid_argument("generate_synthetic: need n >= 40, got " + std::to_string(n));
    if (size < 8 || size % 8 != 0)
        throw std::invalid_argument("generate_synthetic: size must be a positive multiple of 8");
    constexpr int K = 4;

    std::vector<int> class_counts(K, n / K);
    for (int k = 0; k < n % K; ++k) ++class_counts[static_cast<std::size_t>(k)];

    const auto quotas = split_quotas(class_counts);
    for (int k = 0; k < K; ++k)
        if (quotas[static_cast<std::size_t>(k)][1] < 1 || quotas[static_cast<std::size_t>(k)][2] < 1)
            throw std::invalid_argument("generate_synthetic: n too small to populate all splits per class");

    fs::create_directories(out_dir);

    std::vector<ManifestRow> rows;
    SyntheticSummary summary;
    summary.class_counts = class_counts;
    summary.split_counts.assign(K, {0, 0, 0});

    int global = 0;
    for (int label = 0; label < K; ++label) {
        const int m = class_counts[static_cast<std::size_t>(label)];

        // seeded per-class shuffle decides which samples land in which split
        std::vector<Split> splits(static_cast<std::size_t>(m), Split::train);
        for (int i = 0; i < quotas[static_cast<std::size_t>(label)][1]; ++i)
            splits[static_cast<std::size_t>(m - 1 - i)] = Split::val;
        for (int i = 0; i < quotas[static_cast<std::size_t>(label)][2]; ++i)
            splits[static_cast<std::size_t>(m - 1 - quotas[static_cast<std::size_t>(label)][1] - i)] = Split::test;
        Pcg32 split_rng(seed, 0x73706c6974ULL + static_cast<std::uint64_t>(label));
        for (int i = m - 1; i > 0; --i)
            std::swap(splits[static_cast<std::size_t>(i)],
                      splits[split_rng.next_below(static_cast<std::uint32_t>(i + 1))]);

        for (int i = 0; i < m; ++i, ++global) {
            Pcg32 rng(seed, static_cast<std::uint64_t>(global));
            Canvas canvas(size);
            paint_brain(canvas, rng);
            paint_lesion(canvas, label, rng);

            PgmImage img{size, size, {}};
            img.pixels.resize(canvas.image.size());
            for (std::size_t p = 0; p < canvas.image.size(); ++p) {
                double v = canvas.image[p] + rng.normal(0.0, 0.05);
                v = std::clamp(v, 0.0, 1.0);
                img.pixels[p] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
            PgmImage msk{size, size, {}};
            msk.pixels.resize(canvas.mask.size());
            for (std::size_t p = 0; p < canvas.mask.size(); ++p)
                msk.pixels[p] = canvas.mask[p] ? 255 : 0;

            const std::string img_name = numbered("img", global);
            const std::string msk_name = numbered("mask", global);
            write_pgm((fs::path(out_dir) / img_name).string(), img);
            write_pgm((fs::path(out_dir) / msk_name).string(), msk);

            const Split sp = splits[static_cast<std::size_t>(i)];
            rows.push_back({img_name, msk_name, label, sp});
            ++summary.split_counts[static_cast<std::size_t>(label)][static_cast<std::size_t>(sp)];
        }
    }

    summary.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    write_manifest(summary.manifest_path, rows);
    return summary;
}

// ---------------------------------------------------------------- loading

namespace {

PgmImage resize_nearest(const PgmImage& in, int size) {
    if (in.width == size && in.height == size) return in;
    PgmImage out{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size)};
    for (int h = 0; h < size; ++h)
        for (int w = 0; w < size; ++w) {
            const int ih = static_cast<int>(static_cast<std::int64_t>(h) * in.height / size);
            const int iw = static_cast<int>(static_cast<std::int64_t>(w) * in.width / size);
            out.pixels[static_cast<std::size_t>(h) * size + w] =
                in.pixels[static_cast<std::size_t>(ih) * in.width + iw];
        }
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path, int image_size) {
    const auto rows = read_manifest(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    Dataset ds;
    ds.image_size = image_size;
    int max_label = 0;

    for (const auto& row : rows) {
        const std::string img_path = (base / row.image_path).string();
        const std::string msk_path = (base / row.mask_path).string();

        PgmImage img = resize_nearest(read_pgm(img_path), image_size);
        PgmImage msk = resize_nearest(read_pgm(msk_path), image_size);

        Sample sample;
        sample.label = row.label;
        sample.split = row.split;
        sample.image = Tensor<float>({1, image_size, image_size});
        sample.mask = Tensor<float>({1, image_size, image_size});

        std::uint8_t lo = 255, hi = 0;
        for (std::uint8_t p : img.pixels) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        if (lo == hi) {
            sample.degenerate = true;  // constant image maps to all zeros
        } else {
            const float scale = 1.0f / static_cast<float>(hi - lo);
            for (std::size_t p = 0; p < img.pixels.size(); ++p)
                sample.image.data[p] = static_cast<float>(img.pixels[p] - lo) * scale;
        }

        for (std::size_t p = 0; p < msk.pixels.size(); ++p) {
            const std::uint8_t v = msk.pixels[p];
            // reject ambiguous gray: the mask must be binary in intent
            if (v > 63 && v < 192)
                throw std::runtime_error("dataset: mask '" + msk_path + "' has non-binary value " +
                                         std::to_string(v));
            sample.mask.data[p] = v >= 128 ? 1.0f : 0.0f;
        }
        if (row.label == 0)
            for (float v : sample.mask.data)
                if (v != 0.0f)
                    throw std::runtime_error("dataset: healthy sample '" + img_path + "' has a non-empty mask");

        max_label = std::max(max_label, row.label);
        ds.samples.push_back(std::move(sample));
    }

    ds.num_classes = max_label + 1;
    if (ds.samples.empty()) throw std::runtime_error("dataset: manifest '" + manifest_path + "' has no rows");
    return ds;
}

// ----------------------------------------------------------- augmentation

Tensor<float> flip_horizontal(const Tensor<float>& img) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    Tensor<float> out(img.shape);
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w)
                out.data[(static_cast<std::size_t>(c) * H + h) * W + w] =
                    img.data[(static_cast<std::size_t>(c) * H + h) * W + (W - 1 - w)];
    return out;
}

Tensor<float> flip_vertical(const Tensor<float>& img) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    Tensor<float> out(img.shape);
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w)
                out.data[(static_cast<std::size_t>(c) * H + h) * W + w] =
                    img.data[(static_cast<std::size_t>(c) * H + (H - 1 - h)) * W + w];
    return out;
}

Tensor<float> rotate90(const Tensor<float>& img) {
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    if (H != W) throw std::invalid_argument("rotate90: image must be square");
    Tensor<float> out(img.shape);
    // clockwise: out(r, c) = in(H-1-c, r)
    for (int c = 0; c < C; ++c)
        for (int r = 0; r < H; ++r)
            for (int col = 0; col < W; ++col)
                out.data[(static_cast<std::size_t>(c) * H + r) * W + col] =
                    img.data[(static_cast<std::size_t>(c) * H + (H - 1 - col)) * W + r];
    return out;
}

Sample augment(const Sample& sample, Pcg32& rng) {
    const bool hflip = rng.bernoulli(0.5);
    const bool vflip = rng.bernoulli(0.5);
    const int k = static_cast<int>(rng.next_below(4));

    Sample out = sample;
    if (hflip) {
        out.image = flip_horizontal(out.image);
        out.mask = flip_horizontal(out.mask);
    }
    if (vflip) {
        out.image = flip_vertical(out.image);
        out.mask = flip_vertical(out.mask);
    }
    for (int i = 0; i < k; ++i) {
        out.image = rotate90(out.image);
        out.mask = rotate90(out.mask);
    }
    return out;
}

}  // namespace hqcm
