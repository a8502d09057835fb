#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qadv/errors.hpp"
#include "qadv/io.hpp"
#include "qadv/model.hpp"
#include "qadv/rng.hpp"
#include "qadv/tensor.hpp"

namespace qadv {

enum class Split { Train, Val, Test };

inline std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

// Labeled image collection plus an optional split assignment. The split
// vector is empty until assign_splits runs, then has one entry per sample.
struct PatchDataset {
    std::vector<Sample> samples;
    std::vector<Split> splits;
    std::string provenance; // "synthetic seed=..." or the source directory

    void check_split_assigned() const {
        if (splits.size() != samples.size()) {
            throw ContractError("dataset has no split assignment yet");
        }
    }
};

inline std::vector<Sample> subset(const PatchDataset& ds, Split which) {
    ds.check_split_assigned();
    std::vector<Sample> out;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (ds.splits[i] == which) {
            out.push_back(ds.samples[i]);
        }
    }
    return out;
}

// Two-class synthetic texture patches in [0,1], channels-first [3,H,W].
// Both classes share a smooth random background plus pixel noise; class 1
// additionally gets a brightened checkerboard texture in the center window.
// Labels alternate 0,1,0,1,... so any prefix is nearly balanced and the full
// set is exactly balanced.
inline PatchDataset generate_synthetic(std::size_t count, std::size_t height, std::size_t width,
                                       std::uint64_t seed) {
    if (count < 4 || count % 2 != 0) {
        throw ConfigError("synthetic dataset needs an even count >= 4, got " +
                          std::to_string(count));
    }
    if (height < 8 || width < 8) {
        throw ConfigError("synthetic patches need height and width >= 8");
    }
    Rng rng(seed);
    PatchDataset ds;
    ds.provenance = "synthetic seed=" + std::to_string(seed);
    ds.samples.reserve(count);

    const std::size_t grid = 4;
    for (std::size_t idx = 0; idx < count; ++idx) {
        const int label = static_cast<int>(idx % 2);
        Tensor img({3, height, width});
        for (std::size_t c = 0; c < 3; ++c) {
            // Smooth background: bilinear interpolation of a coarse grid.
            double control[grid][grid];
            for (std::size_t gy = 0; gy < grid; ++gy) {
                for (std::size_t gx = 0; gx < grid; ++gx) {
                    control[gy][gx] = rng.uniform(0.25, 0.65);
                }
            }
            for (std::size_t y = 0; y < height; ++y) {
                const double fy = static_cast<double>(y) / (height - 1) * (grid - 1);
                const std::size_t y0 = std::min(grid - 2, static_cast<std::size_t>(fy));
                const double ty = fy - y0;
                for (std::size_t x = 0; x < width; ++x) {
                    const double fx = static_cast<double>(x) / (width - 1) * (grid - 1);
                    const std::size_t x0 = std::min(grid - 2, static_cast<std::size_t>(fx));
                    const double tx = fx - x0;
                    const double v = control[y0][x0] * (1 - ty) * (1 - tx) +
                                     control[y0][x0 + 1] * (1 - ty) * tx +
                                     control[y0 + 1][x0] * ty * (1 - tx) +
                                     control[y0 + 1][x0 + 1] * ty * tx;
                    img.at(c, y, x) = v;
                }
            }
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t y = 0; y < height; ++y) {
                for (std::size_t x = 0; x < width; ++x) {
                    img.at(c, y, x) += rng.uniform(-0.03, 0.03);
                }
            }
        }
        if (label == 1) {
            const double bias = rng.uniform(0.12, 0.20);
            const double amp = rng.uniform(0.08, 0.15);
            const std::size_t y0 = height / 4, y1 = height - height / 4;
            const std::size_t x0 = width / 4, x1 = width - width / 4;
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = x0; x < x1; ++x) {
                        const double checker = ((y + x) % 2 == 0) ? 1.0 : -1.0;
                        img.at(c, y, x) += bias + amp * checker;
                    }
                }
            }
        }
        for (std::size_t i = 0; i < img.numel(); ++i) {
            img[i] = std::min(1.0, std::max(0.0, img[i]));
        }
        ds.samples.push_back({std::move(img), label});
    }
    return ds;
}

// Stratified split by label with largest-remainder rounding per class.
// ratios has 2 entries (train/test) or 3 (train/val/test); entries positive,
// summing to 1. Per-class sample order is shuffled from the seed before
// assignment, so the split is deterministic for a (dataset, seed) pair.
inline void assign_splits(PatchDataset& ds, const std::vector<double>& ratios,
                          std::uint64_t seed) {
    if (ratios.size() != 2 && ratios.size() != 3) {
        throw ConfigError("split needs 2 (train/test) or 3 (train/val/test) ratios, got " +
                          std::to_string(ratios.size()));
    }
    double sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) {
            throw ConfigError("split ratios must be positive");
        }
        sum += r;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
    }
    const std::vector<Split> kinds =
        ratios.size() == 2 ? std::vector<Split>{Split::Train, Split::Test}
                           : std::vector<Split>{Split::Train, Split::Val, Split::Test};

    ds.splits.assign(ds.samples.size(), Split::Train);
    Rng rng(seed);
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            if (ds.samples[i].label == cls) {
                idx.push_back(i);
            }
        }
        if (idx.empty()) {
            throw DataError("dataset has no samples of class " + std::to_string(cls));
        }
        rng.shuffle(idx);
        const std::size_t n = idx.size();
        std::vector<std::size_t> take(kinds.size());
        std::vector<std::pair<double, std::size_t>> rem; // (remainder, split index)
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < kinds.size(); ++s) {
            const double raw = ratios[s] * static_cast<double>(n);
            take[s] = static_cast<std::size_t>(raw);
            rem.push_back({raw - static_cast<double>(take[s]), s});
            assigned += take[s];
        }
        std::stable_sort(rem.begin(), rem.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
            ++take[rem[k % rem.size()].second];
        }
        for (std::size_t s = 0; s < kinds.size(); ++s) {
            if (take[s] == 0) {
                throw DataError("split '" + split_name(kinds[s]) + "' would receive 0 samples of class " +
                                std::to_string(cls) + "; use more data or different ratios");
            }
        }
        std::size_t pos = 0;
        for (std::size_t s = 0; s < kinds.size(); ++s) {
            for (std::size_t k = 0; k < take[s]; ++k, ++pos) {
                ds.splits[idx[pos]] = kinds[s];
            }
        }
    }
}

// ---- binary PPM (P6, maxval 255) ----

// Pixels quantize to bytes as round(clip(v,0,1) * 255); reading divides by
// 255. A write/read round trip is exact for values that are already
// multiples of 1/255 and within 1/510 otherwise.
inline void write_ppm(const std::string& path, const Tensor& img) {
    if (img.rank() != 3 || img.dim(0) != 3) {
        throw DimensionError("write_ppm: need a [3,H,W] tensor, got " + shape_string(img));
    }
    const std::size_t h = img.dim(1), w = img.dim(2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(w * 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::min(1.0, std::max(0.0, img.at(c, y, x)));
                row[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    out.flush();
    if (!out) {
        throw DataError("write failed on '" + path + "'");
    }
}

namespace detail {

inline std::string next_ppm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') {
                ch = in.get();
            }
        } else if (std::isspace(ch)) {
            if (!tok.empty()) {
                return tok;
            }
        } else {
            tok.push_back(static_cast<char>(ch));
        }
        ch = in.get();
    }
    if (tok.empty()) {
        throw FormatError("'" + path + "': truncated PPM header");
    }
    return tok;
}

} // namespace detail

inline Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "' for reading");
    }
    if (detail::next_ppm_token(in, path) != "P6") {
        throw FormatError("'" + path + "': not a binary P6 PPM");
    }
    auto parse_dim = [&](const char* what) {
        const std::string tok = detail::next_ppm_token(in, path);
        try {
            std::size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size() || v < 1) {
                throw std::invalid_argument("");
            }
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw FormatError("'" + path + "': bad " + std::string(what) + " '" + tok + "'");
        }
    };
    const std::size_t w = parse_dim("width");
    const std::size_t h = parse_dim("height");
    const std::size_t maxval = parse_dim("maxval");
    if (maxval != 255) {
        throw FormatError("'" + path + "': only maxval 255 is supported, got " +
                          std::to_string(maxval));
    }
    // Header ends after exactly one whitespace byte (already consumed).
    std::vector<unsigned char> bytes(w * h * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
        throw FormatError("'" + path + "': truncated pixel data");
    }
    Tensor img({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                img.at(c, y, x) = static_cast<double>(bytes[(y * w + x) * 3 + c]) / 255.0;
            }
        }
    }
    return img;
}

// ---- directory datasets: *.ppm files plus labels.csv ----

inline constexpr const char* kLabelsHeader = "filename,label";

inline void write_dataset_directory(const PatchDataset& ds, const std::string& dir) {
    ensure_directory(dir);
    std::ostringstream csv;
    csv << kLabelsHeader << "\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05zu.ppm", i);
        write_ppm(dir + "/" + name, ds.samples[i].image);
        csv << name << "," << ds.samples[i].label << "\n";
    }
    write_text_file(dir + "/labels.csv", csv.str());
}

inline PatchDataset load_dataset_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw DataError("'" + dir + "' is not a directory");
    }
    const std::string csv_path = dir + "/labels.csv";
    const std::string csv = read_text_file(csv_path);
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) {
        throw FormatError("'" + csv_path + "': empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kLabelsHeader) {
        throw FormatError("'" + csv_path + "': header must be '" + std::string(kLabelsHeader) +
                          "', got '" + line + "'");
    }
    std::map<std::string, int> labels;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::size_t comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0) {
            throw FormatError("'" + csv_path + "' line " + std::to_string(lineno) +
                              ": expected 'filename,label'");
        }
        const std::string name = line.substr(0, comma);
        const std::string lab = line.substr(comma + 1);
        if (lab != "0" && lab != "1") {
            throw DataError("'" + csv_path + "' line " + std::to_string(lineno) + ": label '" +
                            lab + "' is not 0 or 1");
        }
        if (!labels.emplace(name, lab == "1" ? 1 : 0).second) {
            throw DataError("'" + csv_path + "' line " + std::to_string(lineno) +
                            ": duplicate filename '" + name + "'");
        }
    }
    if (labels.empty()) {
        throw DataError("'" + csv_path + "': no labeled rows");
    }

    std::set<std::string> on_disk;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            on_disk.insert(entry.path().filename().string());
        }
    }
    std::vector<std::string> problems;
    for (const auto& [name, label] : labels) {
        if (!on_disk.count(name)) {
            problems.push_back("labeled file missing on disk: " + name);
        }
    }
    for (const std::string& name : on_disk) {
        if (!labels.count(name)) {
            problems.push_back("file has no label row: " + name);
        }
    }
    if (!problems.empty()) {
        std::string msg = "'" + dir + "': dataset inconsistent:";
        for (const std::string& p : problems) {
            msg += "\n  " + p;
        }
        throw DataError(msg);
    }

    PatchDataset ds;
    ds.provenance = dir;
    for (const auto& [name, label] : labels) { // map iterates sorted by filename
        ds.samples.push_back({read_ppm(dir + "/" + name), label});
    }
    return ds;
}

// ---- feature-vector datasets: CSV of f0,...,fK,label rows ----

inline PatchDataset load_features_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream is(text);
    std::string line;
    PatchDataset ds;
    ds.provenance = path;
    std::size_t dim = 0;
    int lineno = 0;
    bool header_skipped = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!header_skipped) {
            header_skipped = true;
            bool numeric = true;
            try {
                std::size_t used = 0;
                std::stod(cells.at(0), &used);
                numeric = used == cells[0].size();
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) {
                continue; // header row
            }
        }
        if (cells.size() < 2) {
            throw FormatError("'" + path + "' line " + std::to_string(lineno) +
                              ": need at least one feature and a label");
        }
        const std::string& lab = cells.back();
        if (lab != "0" && lab != "1") {
            throw DataError("'" + path + "' line " + std::to_string(lineno) + ": label '" + lab +
                            "' is not 0 or 1");
        }
        std::vector<double> feats;
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            try {
                std::size_t used = 0;
                feats.push_back(std::stod(cells[i], &used));
                if (used != cells[i].size()) {
                    throw std::invalid_argument("");
                }
            } catch (const std::exception&) {
                throw FormatError("'" + path + "' line " + std::to_string(lineno) +
                                  ": bad feature value '" + cells[i] + "'");
            }
        }
        if (dim == 0) {
            dim = feats.size();
        } else if (feats.size() != dim) {
            throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": row has " +
                              std::to_string(feats.size()) + " features, expected " +
                              std::to_string(dim));
        }
        const std::size_t n_feats = feats.size();
        ds.samples.push_back({Tensor({n_feats}, std::move(feats)), lab == "1" ? 1 : 0});
    }
    if (ds.samples.empty()) {
        throw DataError("'" + path + "': no data rows");
    }
    return ds;
}

} // namespace qadv
