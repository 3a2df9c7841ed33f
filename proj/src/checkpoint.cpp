#include "cavat/checkpoint.hpp"

#include <sstream>

#include "text_io.hpp"

namespace cavat {

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    Network(ckpt.config).check_params(ckpt.params);
    std::ostringstream out;
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "arch hidden=";
    for (std::size_t i = 0; i < ckpt.config.hidden.size(); ++i) out << (i ? "," : "") << ckpt.config.hidden[i];
    out << " classes=" << ckpt.config.classes << " kernel=" << ckpt.config.kernel << '\n';
    out << "tensors " << ckpt.params.count() << '\n';
    for (const auto& t : ckpt.params.tensors()) {
        out << "tensor " << t.name << ' ' << t.shape.size();
        for (int d : t.shape) out << ' ' << d;
        out << '\n';
        for (std::size_t i = 0; i < t.values.size(); ++i) out << (i ? " " : "") << detail::format_hex(t.values[i]);
        out << '\n';
    }
    out << "end\n";
    detail::write_atomically(path, out.str());
}

namespace {

NetConfig parse_arch(detail::LineReader& in, std::string_view line) {
    const auto tok = detail::split_ws(line);
    if (tok.size() != 4 || tok[0] != "arch") throw in.error("expected 'arch hidden=.. classes=.. kernel=..'");
    NetConfig cfg;
    cfg.hidden.clear();
    for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string_view::npos) throw in.error("malformed arch field");
        const auto key = tok[i].substr(0, eq);
        auto val = tok[i].substr(eq + 1);
        if (key == "hidden") {
            while (!val.empty()) {
                const auto comma = val.find(',');
                int width = 0;
                if (!detail::parse_int(val.substr(0, comma), width)) throw in.error("bad hidden width");
                cfg.hidden.push_back(width);
                val = comma == std::string_view::npos ? std::string_view{} : val.substr(comma + 1);
            }
        } else if (key == "classes") {
            if (!detail::parse_int(val, cfg.classes)) throw in.error("bad class count");
        } else if (key == "kernel") {
            if (!detail::parse_int(val, cfg.kernel)) throw in.error("bad kernel size");
        } else {
            throw in.error("unknown arch field '" + std::string(key) + "'");
        }
    }
    return cfg;
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    detail::LineReader in(path);
    {
        const std::string text = in.require("magic");
        const auto tok = detail::split_ws(text);
        int version = 0;
        if (tok.size() != 2 || tok[0] != kCheckpointMagic) throw in.error("not a checkpoint file");
        if (!detail::parse_int(tok[1], version) || version != kCheckpointVersion)
            throw in.error("unsupported checkpoint version");
    }
    Checkpoint ckpt;
    ckpt.config = parse_arch(in, in.require("arch line"));
    std::size_t count = 0;
    {
        const std::string text = in.require("tensor count");
        const auto tok = detail::split_ws(text);
        if (tok.size() != 2 || tok[0] != "tensors" || !detail::parse_int(tok[1], count))
            throw in.error("expected 'tensors <count>'");
    }
    std::vector<Tensor> tensors;
    for (std::size_t t = 0; t < count; ++t) {
        const std::string text = in.require("tensor header");
        const auto tok = detail::split_ws(text);
        std::size_t rank = 0;
        if (tok.size() < 3 || tok[0] != "tensor" || !detail::parse_int(tok[2], rank) || tok.size() != 3 + rank)
            throw in.error("expected 'tensor <name> <rank> <dims...>'");
        std::vector<int> shape(rank);
        for (std::size_t d = 0; d < rank; ++d)
            if (!detail::parse_int(tok[3 + d], shape[d]) || shape[d] <= 0) throw in.error("bad tensor dimension");
        Tensor tensor = Tensor::zeros(std::string(tok[1]), shape);
        const std::string values_line = in.require("tensor values");
        const auto vals = detail::split_ws(values_line);
        if (vals.size() != tensor.size()) throw in.error("tensor value count does not match its shape");
        for (std::size_t i = 0; i < vals.size(); ++i)
            if (!detail::parse_double(vals[i], tensor.values[i])) throw in.error("bad tensor value");
        tensors.push_back(std::move(tensor));
    }
    if (detail::trim(in.require("end marker")) != "end") throw in.error("expected 'end'");
    ckpt.params = NetworkParams(std::move(tensors));
    Network(ckpt.config).check_params(ckpt.params);
    return ckpt;
}

}  // namespace cavat
