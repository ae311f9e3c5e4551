#include "rulf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "rulf/error.hpp"
#include "rulf/preprocess.hpp"
#include "rulf/rng.hpp"
#include "rulf/util.hpp"

namespace rulf {

namespace {

constexpr std::size_t kConvFilters1 = 64;
constexpr std::size_t kConvFilters2 = 64;
constexpr std::size_t kConvFilters3 = 128;
constexpr std::size_t kKernel = 3;
constexpr std::size_t kLstmUnits = 64;
constexpr std::size_t kDepthFilters1 = 64;
constexpr std::size_t kDepthFilters2 = 32;

const char* kArchNames[] = {"forenet2d", "forenet3d", "cnn",   "lstm",      "cnn_lstm",
                            "cnn_am",    "lstm_am",   "cnn_m", "dense_only"};

bool uses_conv_stack(Architecture a) {
    return a == Architecture::ForeNet2d || a == Architecture::Cnn ||
           a == Architecture::CnnLstm || a == Architecture::CnnAm;
}

bool uses_depth_stack(Architecture a) {
    return a == Architecture::ForeNet3d || a == Architecture::CnnM;
}

// Appends parameter tensors in manifest order, drawing every weight from one
// seeded stream so initialization is a pure function of the spec.
struct ParamBuilder {
    Rng rng;
    std::vector<Tensor>& params;
    std::vector<std::string>& names;

    Tensor uniform_fan(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
        return t;
    }

    void add(const std::string& name, Tensor t) {
        names.push_back(name);
        params.push_back(std::move(t));
    }

    void conv1d(const std::string& name, std::size_t k, std::size_t cin, std::size_t cout) {
        add(name + ".w", uniform_fan({k, cin, cout}, k * cin, k * cout));
        add(name + ".b", Tensor({cout}));
    }

    void conv2d(const std::string& name, std::size_t k, std::size_t cin, std::size_t cout) {
        add(name + ".w", uniform_fan({k, k, cin, cout}, k * k * cin, k * k * cout));
        add(name + ".b", Tensor({cout}));
    }

    void lstm(const std::string& name, std::size_t d, std::size_t u) {
        add(name + ".w", uniform_fan({d, 4 * u}, d, 4 * u));
        add(name + ".u", uniform_fan({u, 4 * u}, u, 4 * u));
        Tensor b({4 * u});
        for (std::size_t i = u; i < 2 * u; ++i) b[i] = 1.0; // forget gate starts open
        add(name + ".b", std::move(b));
    }

    void dense(const std::string& name, std::size_t d, std::size_t units) {
        add(name + ".w", uniform_fan({d, units}, d, units));
        add(name + ".b", Tensor({units}));
    }
};

std::string shape_text(const Tensor& t) {
    std::string s;
    for (std::size_t d = 0; d < t.rank(); ++d) {
        if (d) s += 'x';
        s += std::to_string(t.dim(d));
    }
    return s;
}

} // namespace

std::string architecture_name(Architecture arch) {
    return kArchNames[static_cast<std::size_t>(arch)];
}

Architecture architecture_from_string(const std::string& name) {
    const std::string t = trim(name);
    for (std::size_t i = 0; i < std::size(kArchNames); ++i)
        if (t == kArchNames[i]) return static_cast<Architecture>(i);
    std::string valid;
    for (const char* n : kArchNames) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    raise(ErrorCode::InvalidConfig, "unknown architecture '" + t + "' (one of: " + valid + ")");
}

Model Model::build(const ModelSpec& spec) {
    const std::size_t l = spec.l;
    const std::size_t m = spec.m;
    if (uses_conv_stack(spec.architecture) && l < 7)
        raise(ErrorCode::UnsupportedShape,
              architecture_name(spec.architecture) + " needs l >= 7, got l=" + std::to_string(l));
    if (uses_depth_stack(spec.architecture) && (l < 5 || m < 5))
        raise(ErrorCode::UnsupportedShape, architecture_name(spec.architecture) +
                                               " needs l >= 5 and m >= 5, got l=" +
                                               std::to_string(l) + " m=" + std::to_string(m));
    if (l == 0 || m == 0)
        raise(ErrorCode::UnsupportedShape, "window must be non-empty, got l=" + std::to_string(l) +
                                               " m=" + std::to_string(m));

    Model model;
    model.spec_ = spec;
    ParamBuilder b{Rng(spec.seed), model.params_, model.param_names_};

    switch (spec.architecture) {
    case Architecture::ForeNet2d:
        b.conv1d("conv1", kKernel, m, kConvFilters1);
        b.conv1d("conv2", kKernel, kConvFilters1, kConvFilters2);
        b.conv1d("conv3", kKernel, kConvFilters2, kConvFilters3);
        b.lstm("lstm", kConvFilters3, kLstmUnits);
        b.dense("dense", (l - 6) * kLstmUnits, 1);
        break;
    case Architecture::CnnLstm:
        b.conv1d("conv1", kKernel, m, kConvFilters1);
        b.conv1d("conv2", kKernel, kConvFilters1, kConvFilters2);
        b.conv1d("conv3", kKernel, kConvFilters2, kConvFilters3);
        b.lstm("lstm", kConvFilters3, kLstmUnits);
        b.dense("dense", (l - 6) * kLstmUnits, 1);
        break;
    case Architecture::Cnn:
    case Architecture::CnnAm:
        b.conv1d("conv1", kKernel, m, kConvFilters1);
        b.conv1d("conv2", kKernel, kConvFilters1, kConvFilters2);
        b.conv1d("conv3", kKernel, kConvFilters2, kConvFilters3);
        b.dense("dense", (l - 6) * kConvFilters3, 1);
        break;
    case Architecture::Lstm:
    case Architecture::LstmAm:
        b.lstm("lstm", m, kLstmUnits);
        b.dense("dense", l * kLstmUnits, 1);
        break;
    case Architecture::ForeNet3d:
    case Architecture::CnnM:
        b.conv2d("conv1", kKernel, 1, kDepthFilters1);
        b.conv2d("conv2", kKernel, kDepthFilters1, kDepthFilters2);
        b.conv2d("conv3", 1, kDepthFilters2, 1);
        b.dense("dense", (l - 4) * (m - 4) * kDepthFilters2, 1);
        break;
    case Architecture::DenseOnly:
        b.dense("dense", l * m, 1);
        break;
    }
    return model;
}

std::size_t Model::param_count() const {
    std::size_t total = 0;
    for (const Tensor& p : params_) total += p.size();
    return total;
}

std::vector<LayerSummary> Model::summary() const {
    const std::size_t l = spec_.l;
    const std::size_t m = spec_.m;
    std::map<std::string, std::size_t> by_layer;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const std::string layer = param_names_[i].substr(0, param_names_[i].find('.'));
        by_layer[layer] += params_[i].size();
    }

    std::vector<LayerSummary> out;
    auto push = [&](const std::string& name, std::vector<std::size_t> shape,
                    const std::string& layer = "") {
        out.push_back({name, std::move(shape), layer.empty() ? 0 : by_layer[layer]});
    };

    switch (spec_.architecture) {
    case Architecture::ForeNet2d:
        push("conv1d", {l - 2, kConvFilters1}, "conv1");
        push("conv1d", {l - 4, kConvFilters2}, "conv2");
        push("conv1d", {l - 6, kConvFilters3}, "conv3");
        push("lstm", {l - 6, kLstmUnits}, "lstm");
        push("attention", {l - 6, kLstmUnits});
        push("flatten", {(l - 6) * kLstmUnits});
        push("dense", {1}, "dense");
        break;
    case Architecture::CnnLstm:
        push("conv1d", {l - 2, kConvFilters1}, "conv1");
        push("conv1d", {l - 4, kConvFilters2}, "conv2");
        push("conv1d", {l - 6, kConvFilters3}, "conv3");
        push("lstm", {l - 6, kLstmUnits}, "lstm");
        push("flatten", {(l - 6) * kLstmUnits});
        push("dense", {1}, "dense");
        break;
    case Architecture::Cnn:
        push("conv1d", {l - 2, kConvFilters1}, "conv1");
        push("conv1d", {l - 4, kConvFilters2}, "conv2");
        push("conv1d", {l - 6, kConvFilters3}, "conv3");
        push("flatten", {(l - 6) * kConvFilters3});
        push("dense", {1}, "dense");
        break;
    case Architecture::CnnAm:
        push("conv1d", {l - 2, kConvFilters1}, "conv1");
        push("conv1d", {l - 4, kConvFilters2}, "conv2");
        push("conv1d", {l - 6, kConvFilters3}, "conv3");
        push("attention", {l - 6, kConvFilters3});
        push("flatten", {(l - 6) * kConvFilters3});
        push("dense", {1}, "dense");
        break;
    case Architecture::Lstm:
        push("lstm", {l, kLstmUnits}, "lstm");
        push("flatten", {l * kLstmUnits});
        push("dense", {1}, "dense");
        break;
    case Architecture::LstmAm:
        push("lstm", {l, kLstmUnits}, "lstm");
        push("attention", {l, kLstmUnits});
        push("flatten", {l * kLstmUnits});
        push("dense", {1}, "dense");
        break;
    case Architecture::ForeNet3d:
    case Architecture::CnnM:
        push("conv2d", {l - 2, m - 2, kDepthFilters1}, "conv1");
        push("conv2d", {l - 4, m - 4, kDepthFilters2}, "conv2");
        push("conv2d", {l - 4, m - 4, 1}, "conv3");
        if (spec_.architecture == Architecture::ForeNet3d)
            push("attention", {l - 4, m - 4, 1});
        push("multiply", {l - 4, m - 4, kDepthFilters2});
        push("multiply", {l - 4, m - 4, kDepthFilters2});
        push("multiply", {l - 4, m - 4, kDepthFilters2});
        push("flatten", {(l - 4) * (m - 4) * kDepthFilters2});
        push("dense", {1}, "dense");
        break;
    case Architecture::DenseOnly:
        push("flatten", {l * m});
        push("dense", {1}, "dense");
        break;
    }
    return out;
}

ValueRef Model::forward(Tape& tape, const Tensor& window,
                        std::vector<ValueRef>* param_refs) const {
    const bool depth = uses_depth_stack(spec_.architecture);
    Tensor in = window;
    if (depth && window.rank() == 2) in = expand_depth(window);
    const std::size_t want_rank = depth ? 3 : 2;
    if (in.rank() != want_rank || in.dim(0) != spec_.l || in.dim(1) != spec_.m ||
        (depth && in.dim(2) != 1))
        raise(ErrorCode::ShapeMismatch,
              "window " + window.shape_string() + " does not fit l=" + std::to_string(spec_.l) +
                  " m=" + std::to_string(spec_.m));

    std::vector<ValueRef> refs;
    refs.reserve(params_.size());
    for (const Tensor& p : params_) refs.push_back(tape.param(p));
    if (param_refs) *param_refs = refs;

    std::size_t k = 0;
    auto next = [&] { return refs[k++]; };
    ValueRef x = tape.input(std::move(in));

    switch (spec_.architecture) {
    case Architecture::ForeNet2d: {
        ValueRef w1 = next(), b1 = next(), w2 = next(), b2 = next(), w3 = next(), b3 = next();
        x = tape.conv1d(x, w1, b1, Activation::Relu);
        x = tape.conv1d(x, w2, b2, Activation::Relu);
        x = tape.conv1d(x, w3, b3, Activation::Relu);
        ValueRef lw = next(), lu = next(), lb = next();
        x = tape.lstm(x, lw, lu, lb);
        x = tape.dot_attention(x);
        x = tape.flatten(x);
        ValueRef dw = next(), db = next();
        return tape.dense(x, dw, db);
    }
    case Architecture::CnnLstm: {
        ValueRef w1 = next(), b1 = next(), w2 = next(), b2 = next(), w3 = next(), b3 = next();
        x = tape.conv1d(x, w1, b1, Activation::Relu);
        x = tape.conv1d(x, w2, b2, Activation::Relu);
        x = tape.conv1d(x, w3, b3, Activation::Relu);
        ValueRef lw = next(), lu = next(), lb = next();
        x = tape.lstm(x, lw, lu, lb);
        x = tape.flatten(x);
        ValueRef dw = next(), db = next();
        return tape.dense(x, dw, db);
    }
    case Architecture::Cnn:
    case Architecture::CnnAm: {
        ValueRef w1 = next(), b1 = next(), w2 = next(), b2 = next(), w3 = next(), b3 = next();
        x = tape.conv1d(x, w1, b1, Activation::Relu);
        x = tape.conv1d(x, w2, b2, Activation::Relu);
        x = tape.conv1d(x, w3, b3, Activation::Relu);
        if (spec_.architecture == Architecture::CnnAm) x = tape.dot_attention(x);
        x = tape.flatten(x);
        ValueRef dw = next(), db = next();
        return tape.dense(x, dw, db);
    }
    case Architecture::Lstm:
    case Architecture::LstmAm: {
        ValueRef lw = next(), lu = next(), lb = next();
        x = tape.lstm(x, lw, lu, lb);
        if (spec_.architecture == Architecture::LstmAm) x = tape.dot_attention(x);
        x = tape.flatten(x);
        ValueRef dw = next(), db = next();
        return tape.dense(x, dw, db);
    }
    case Architecture::ForeNet3d:
    case Architecture::CnnM: {
        ValueRef w1 = next(), b1 = next(), w2 = next(), b2 = next(), w3 = next(), b3 = next();
        x = tape.conv2d(x, w1, b1, Activation::Relu);
        ValueRef features = tape.conv2d(x, w2, b2, Activation::Relu);
        ValueRef map = tape.conv2d(features, w3, b3, Activation::Linear);
        if (spec_.architecture == Architecture::ForeNet3d) map = tape.spatial_softmax(map);
        ValueRef prod = tape.broadcast_multiply(features, map);
        prod = tape.broadcast_multiply(prod, map);
        prod = tape.broadcast_multiply(prod, map);
        x = tape.flatten(prod);
        ValueRef dw = next(), db = next();
        return tape.dense(x, dw, db);
    }
    case Architecture::DenseOnly: {
        x = tape.flatten(x);
        ValueRef dw = next(), db = next();
        return tape.dense(x, dw, db);
    }
    }
    raise(ErrorCode::InvalidConfig, "unreachable architecture");
}

double Model::predict(const Tensor& window) const {
    Tape tape;
    ValueRef out = forward(tape, window);
    return tape.value(out)[0];
}

void save_checkpoint(const Model& model, const std::filesystem::path& path,
                     const std::string& label) {
    std::string header;
    header += "architecture=" + architecture_name(model.spec().architecture) + "\n";
    header += "l=" + std::to_string(model.spec().l) + "\n";
    header += "m=" + std::to_string(model.spec().m) + "\n";
    header += "seed=" + std::to_string(model.spec().seed) + "\n";
    std::string manifest;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        if (i) manifest += ';';
        manifest += model.param_names()[i] + ":" + shape_text(model.params()[i]);
    }
    header += "params=" + manifest + "\n";
    header += "created_by=rulf 1\n";
    if (!label.empty()) {
        if (label.find('\n') != std::string::npos)
            raise(ErrorCode::InvalidConfig, "checkpoint label must be a single line");
        header += "label=" + label + "\n";
    }

    std::string file = "FNET";
    append_u32(file, 1);
    append_u32(file, static_cast<std::uint32_t>(header.size()));
    file += header;
    for (const Tensor& p : model.params())
        for (std::size_t i = 0; i < p.size(); ++i) append_f64(file, p[i]);
    append_u32(file, crc32(file.data(), file.size()));
    write_file_atomic(path, file);
}

Model load_checkpoint(const std::filesystem::path& path) {
    const std::string file = read_text_file(path);
    if (file.size() < 4 || file.compare(0, 4, "FNET") != 0)
        raise(ErrorCode::BadMagic, path.string() + " is not a checkpoint");
    if (file.size() < 12)
        raise(ErrorCode::ChecksumMismatch, path.string() + " is truncated");
    std::size_t pos = 4;
    const std::uint32_t version = read_u32(file, pos);
    if (version != 1)
        raise(ErrorCode::VersionMismatch,
              path.string() + " has format version " + std::to_string(version) + ", expected 1");
    const std::uint32_t header_len = read_u32(file, pos);
    if (file.size() < 12 + static_cast<std::size_t>(header_len) + 4)
        raise(ErrorCode::ChecksumMismatch, path.string() + " is truncated");

    std::size_t tail = file.size() - 4;
    const std::uint32_t stored = read_u32(file, tail);
    if (crc32(file.data(), file.size() - 4) != stored)
        raise(ErrorCode::ChecksumMismatch, path.string() + " fails its checksum");

    const std::string header = file.substr(12, header_len);
    std::map<std::string, std::string> kv;
    std::size_t start = 0;
    while (start < header.size()) {
        std::size_t nl = header.find('\n', start);
        if (nl == std::string::npos) nl = header.size();
        const std::string line = header.substr(start, nl - start);
        start = nl + 1;
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorCode::IoError, path.string() + " has a malformed header line");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"architecture", "l", "m", "seed", "params"})
        if (!kv.count(key))
            raise(ErrorCode::IoError,
                  path.string() + " header is missing '" + std::string(key) + "'");

    ModelSpec spec;
    spec.architecture = architecture_from_string(kv["architecture"]);
    auto l = parse_int(kv["l"]);
    auto m = parse_int(kv["m"]);
    auto seed = parse_int(kv["seed"]);
    if (!l || !m || !seed || *l <= 0 || *m <= 0 || *seed < 0)
        raise(ErrorCode::IoError, path.string() + " header has bad dimensions");
    spec.l = static_cast<std::size_t>(*l);
    spec.m = static_cast<std::size_t>(*m);
    spec.seed = static_cast<std::uint64_t>(*seed);

    Model model = Model::build(spec);
    std::string manifest;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        if (i) manifest += ';';
        manifest += model.param_names()[i] + ":" + shape_text(model.params()[i]);
    }
    if (manifest != kv["params"])
        raise(ErrorCode::IoError,
              path.string() + " parameter manifest does not match its architecture");

    const std::size_t expected = 12 + header_len + model.param_count() * 8 + 4;
    if (file.size() != expected)
        raise(ErrorCode::IoError, path.string() + " payload has the wrong size");

    pos = 12 + header_len;
    for (Tensor& p : model.params())
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = read_f64(file, pos);
    return model;
}

} // namespace rulf
