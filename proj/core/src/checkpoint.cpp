#include "aeic/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace aeic {

namespace {

void write_f64_le(std::ostream& out, double value) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    std::array<char, 8> bytes;
    for (int i = 0; i < 8; ++i) {
        bytes[static_cast<std::size_t>(i)] =
            static_cast<char>((bits >> (8 * i)) & 0xffu);
    }
    out.write(bytes.data(), bytes.size());
}

double read_f64_le(std::istream& in, std::size_t& offset) {
    std::array<char, 8> bytes;
    in.read(bytes.data(), bytes.size());
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw CheckpointError("file truncated inside float64 data",
                              offset + static_cast<std::size_t>(in.gcount()));
    }
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) |
               static_cast<std::uint64_t>(
                   static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]));
    }
    offset += bytes.size();
    return std::bit_cast<double>(bits);
}

std::string read_line(std::istream& in, std::size_t& offset, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw CheckpointError(std::string("file truncated before ") + what, offset);
    }
    offset += line.size() + 1;
    return line;
}

// The dense layers of an AEMODEL in serialization order.
std::vector<const DenseLayer*> layer_order(const AeModel& model) {
    std::vector<const DenseLayer*> layers;
    for (const DenseLayer& layer : model.transmitter.layers()) layers.push_back(&layer);
    for (const DenseLayer& layer : model.receiver.layers()) layers.push_back(&layer);
    return layers;
}

std::vector<DenseLayer*> layer_order(AeModel& model) {
    std::vector<DenseLayer*> layers;
    for (DenseLayer& layer : model.transmitter.layers()) layers.push_back(&layer);
    for (DenseLayer& layer : model.receiver.layers()) layers.push_back(&layer);
    return layers;
}

// Architecture implied by (n, k); checkpoints carry exactly this shape.
AeModel blank_model(std::size_t n, std::size_t k) {
    AeModel model;
    model.n = n;
    model.k = k;
    const std::size_t num_messages = model.message_count();
    model.transmitter.push_back(DenseLayer(num_messages, num_messages, Activation::elu));
    model.transmitter.push_back(DenseLayer(num_messages, 2 * n, Activation::linear));
    model.norm = PowerNormLayer(n);
    model.receiver.push_back(DenseLayer(2 * n, num_messages, Activation::relu));
    model.receiver.push_back(DenseLayer(num_messages, num_messages, Activation::softmax));
    return model;
}

}  // namespace

void write_checkpoint(const AeModel& model, std::ostream& out) {
    const std::vector<const DenseLayer*> layers = layer_order(model);
    out << "AEMODEL v1 n=" << model.n << " k=" << model.k << " layers=" << layers.size()
        << "\n";
    for (const DenseLayer* layer : layers) {
        out << "dense " << layer->in_dim() << " " << layer->out_dim() << " "
            << activation_name(layer->activation()) << "\n";
    }
    for (const DenseLayer* layer : layers) {
        const Tensor& w = layer->weights();
        for (double value : w.v) write_f64_le(out, value);
        const Tensor& b = layer->bias();
        for (double value : b.v) write_f64_le(out, value);
    }
    if (!out) {
        throw std::runtime_error("write_checkpoint: stream write failed");
    }
}

AeModel read_checkpoint(std::istream& in) {
    std::size_t offset = 0;
    const std::string header = read_line(in, offset, "header");

    std::istringstream fields(header);
    std::string magic, version;
    fields >> magic >> version;
    if (magic != "AEMODEL") {
        throw CheckpointError("not an AEMODEL checkpoint", 0);
    }
    if (version != "v1") {
        throw CheckpointError("unsupported checkpoint version '" + version +
                                  "' (expected v1)",
                              magic.size() + 1);
    }
    std::size_t n = 0, k = 0, layer_count = 0;
    std::string token;
    bool have_n = false, have_k = false, have_layers = false;
    while (fields >> token) {
        std::size_t* slot = nullptr;
        std::size_t skip = 0;
        if (token.rfind("n=", 0) == 0) {
            slot = &n;
            have_n = true;
            skip = 2;
        } else if (token.rfind("k=", 0) == 0) {
            slot = &k;
            have_k = true;
            skip = 2;
        } else if (token.rfind("layers=", 0) == 0) {
            slot = &layer_count;
            have_layers = true;
            skip = 7;
        } else {
            throw CheckpointError("unrecognized header field '" + token + "'", 0);
        }
        try {
            *slot = std::stoul(token.substr(skip));
        } catch (const std::exception&) {
            throw CheckpointError("bad integer in header field '" + token + "'", 0);
        }
    }
    if (!have_n || !have_k || !have_layers) {
        throw CheckpointError("header missing n=, k= or layers= field", 0);
    }
    if (n == 0 || k == 0 || k >= 63) {
        throw CheckpointError("header carries unusable dimensions n=" +
                                  std::to_string(n) + " k=" + std::to_string(k),
                              0);
    }

    AeModel model = blank_model(n, k);
    std::vector<DenseLayer*> layers = layer_order(model);
    if (layer_count != layers.size()) {
        throw CheckpointError("header declares " + std::to_string(layer_count) +
                                  " layers; an (n=" + std::to_string(n) +
                                  ", k=" + std::to_string(k) + ") model has " +
                                  std::to_string(layers.size()),
                              0);
    }

    for (DenseLayer* layer : layers) {
        const std::size_t line_offset = offset;
        const std::string line = read_line(in, offset, "layer descriptor");
        std::istringstream parts(line);
        std::string kind, activation;
        std::size_t in_size = 0, out_size = 0;
        if (!(parts >> kind >> in_size >> out_size >> activation) || kind != "dense") {
            throw CheckpointError("malformed layer descriptor '" + line + "'",
                                  line_offset);
        }
        if (in_size != layer->in_dim() || out_size != layer->out_dim() ||
            activation != activation_name(layer->activation())) {
            throw CheckpointError(
                "layer descriptor '" + line + "' does not match expected dense " +
                    std::to_string(layer->in_dim()) + " " +
                    std::to_string(layer->out_dim()) + " " +
                    std::string(activation_name(layer->activation())),
                line_offset);
        }
    }

    for (DenseLayer* layer : layers) {
        Tensor& w = layer->weights();
        for (double& value : w.v) value = read_f64_le(in, offset);
        Tensor& b = layer->bias();
        for (double& value : b.v) value = read_f64_le(in, offset);
    }

    if (in.peek() != std::istream::traits_type::eof()) {
        throw CheckpointError("unexpected trailing data after weights", offset);
    }
    return model;
}

void save_checkpoint(const AeModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_checkpoint: cannot open '" + path +
                                 "' for writing");
    }
    write_checkpoint(model, out);
    out.flush();
    if (!out) {
        throw std::runtime_error("save_checkpoint: write to '" + path + "' failed");
    }
}

AeModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_checkpoint: cannot open '" + path +
                                 "' for reading");
    }
    return read_checkpoint(in);
}

void write_environment(std::span<const Tensor> interferer_codebooks, std::size_t n,
                       std::size_t k, std::ostream& out) {
    if (interferer_codebooks.empty()) {
        throw std::invalid_argument("write_environment: no interferer codebooks");
    }
    const std::size_t num_messages = std::size_t{1} << k;
    for (const Tensor& book : interferer_codebooks) {
        if (book.rows != 2 * n || book.cols != num_messages) {
            throw std::invalid_argument("write_environment: codebook shape " +
                                        book.shape_str() + " does not match (n=" +
                                        std::to_string(n) + ", k=" + std::to_string(k) +
                                        ")");
        }
    }
    out << "AEENV v1 m=" << interferer_codebooks.size() + 1 << " n=" << n
        << " k=" << k << "\n";
    for (const Tensor& book : interferer_codebooks) {
        for (double value : book.v) write_f64_le(out, value);
    }
    if (!out) {
        throw std::runtime_error("write_environment: stream write failed");
    }
}

std::vector<Tensor> read_environment(std::istream& in) {
    std::size_t offset = 0;
    const std::string header = read_line(in, offset, "header");

    std::istringstream fields(header);
    std::string magic, version;
    fields >> magic >> version;
    if (magic != "AEENV") {
        throw CheckpointError("not an AEENV environment file", 0);
    }
    if (version != "v1") {
        throw CheckpointError("unsupported environment version '" + version +
                                  "' (expected v1)",
                              magic.size() + 1);
    }
    std::size_t m = 0, n = 0, k = 0;
    std::string token;
    bool have_m = false, have_n = false, have_k = false;
    while (fields >> token) {
        std::size_t* slot = nullptr;
        std::size_t skip = 2;
        if (token.rfind("m=", 0) == 0) {
            slot = &m;
            have_m = true;
        } else if (token.rfind("n=", 0) == 0) {
            slot = &n;
            have_n = true;
        } else if (token.rfind("k=", 0) == 0) {
            slot = &k;
            have_k = true;
        } else {
            throw CheckpointError("unrecognized header field '" + token + "'", 0);
        }
        try {
            *slot = std::stoul(token.substr(skip));
        } catch (const std::exception&) {
            throw CheckpointError("bad integer in header field '" + token + "'", 0);
        }
    }
    if (!have_m || !have_n || !have_k) {
        throw CheckpointError("header missing m=, n= or k= field", 0);
    }
    if (m < 2 || n == 0 || k == 0 || k >= 63) {
        throw CheckpointError("header carries unusable dimensions m=" +
                                  std::to_string(m) + " n=" + std::to_string(n) +
                                  " k=" + std::to_string(k),
                              0);
    }

    const std::size_t num_messages = std::size_t{1} << k;
    std::vector<Tensor> books;
    books.reserve(m - 1);
    for (std::size_t u = 0; u + 1 < m; ++u) {
        Tensor book(2 * n, num_messages);
        for (double& value : book.v) value = read_f64_le(in, offset);
        books.push_back(std::move(book));
    }
    if (in.peek() != std::istream::traits_type::eof()) {
        throw CheckpointError("unexpected trailing data after codebooks", offset);
    }
    return books;
}

void save_environment(std::span<const Tensor> interferer_codebooks, std::size_t n,
                      std::size_t k, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_environment: cannot open '" + path +
                                 "' for writing");
    }
    write_environment(interferer_codebooks, n, k, out);
    out.flush();
    if (!out) {
        throw std::runtime_error("save_environment: write to '" + path + "' failed");
    }
}

std::vector<Tensor> load_environment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_environment: cannot open '" + path +
                                 "' for reading");
    }
    return read_environment(in);
}

}  // namespace aeic
