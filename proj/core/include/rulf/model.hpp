#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rulf/tape.hpp"
#include "rulf/tensor.hpp"

namespace rulf {

// Forecasting architectures. The two headline networks plus the reduced
// variants used for comparison runs; dense_only is a degenerate network kept
// for calibration tests.
enum class Architecture {
    ForeNet2d,
    ForeNet3d,
    Cnn,
    Lstm,
    CnnLstm,
    CnnAm,
    LstmAm,
    CnnM,
    DenseOnly,
};

std::string architecture_name(Architecture arch);
// Raises InvalidConfig on an unknown name.
Architecture architecture_from_string(const std::string& name);

struct ModelSpec {
    Architecture architecture = Architecture::ForeNet2d;
    std::size_t l = 24; // window length in logs
    std::size_t m = 82; // parameters per log
    std::uint64_t seed = 0;
};

struct LayerSummary {
    std::string name;
    std::vector<std::size_t> output_shape; // batch dimension omitted
    std::size_t params = 0;
};

// A built network: parameter tensors in fixed manifest order plus the spec
// that reproduces the architecture. Immutable after build unless the caller
// mutates params() during training.
class Model {
public:
    // Initializes weights from the spec seed: uniform fan-in/fan-out limits
    // for conv, dense, and both LSTM kernels; zero biases except the LSTM
    // forget gate block, which starts at one.
    // Raises UnsupportedShape when the window cannot survive the conv stack
    // (l < 7 for the three length-3 convolutions; l < 5 or m < 5 for the
    // depth variants).
    static Model build(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }
    std::size_t param_count() const;
    // Per-layer output shapes and parameter counts in forward order.
    std::vector<LayerSummary> summary() const;

    const std::vector<Tensor>& params() const { return params_; }
    std::vector<Tensor>& params() { return params_; }
    const std::vector<std::string>& param_names() const { return param_names_; }

    // Builds the forward graph for one window. The window is {l, m}; depth
    // variants also accept {l, m, 1}. When param_refs is given it receives
    // one leaf per parameter tensor, aligned with params().
    ValueRef forward(Tape& tape, const Tensor& window,
                     std::vector<ValueRef>* param_refs = nullptr) const;
    double predict(const Tensor& window) const;

private:
    ModelSpec spec_;
    std::vector<Tensor> params_;
    std::vector<std::string> param_names_;
};

// Checkpoint layout: magic "FNET", format version and header length as
// 32-bit little-endian words, a key=value text header carrying the spec and
// the parameter manifest, the parameters as little-endian 64-bit floats in
// manifest order, then a CRC-32 of every preceding byte.
void save_checkpoint(const Model& model, const std::filesystem::path& path,
                     const std::string& label = "");
// Raises BadMagic, VersionMismatch, or ChecksumMismatch; a truncated file
// fails the checksum.
Model load_checkpoint(const std::filesystem::path& path);

} // namespace rulf
