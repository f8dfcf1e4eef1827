#include "semproto/npm.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "semproto/errors.hpp"

namespace semproto {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'N', 'P', 'M', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagTrainingState = 1u;

}  // namespace

NPModel NPModel::make(const NpmArchitecture& arch, Rng& rng) {
    NPModel model;
    model.arch = arch;
    const int h = arch.hidden;
    const int cm = arch.cm_size;
    for (int ue = 0; ue < kNumUes; ++ue) {
        model.ucm_seg[ue] = MlpSegment::make({arch.input_width(), h, h, cm}, true, rng);
        model.dcm_seg[ue] = MlpSegment::make({2 * cm, h, h, cm}, true, rng);
        model.action_seg[ue] = MlpSegment::make({cm, h, h, 3}, false, rng);
    }
    return model;
}

std::size_t NPModel::param_count() const {
    std::size_t n = 0;
    for (int ue = 0; ue < kNumUes; ++ue) {
        n += ucm_seg[ue].param_count();
        n += dcm_seg[ue].param_count();
        n += action_seg[ue].param_count();
    }
    return n;
}

std::int64_t NPModel::forward_flops() const {
    std::int64_t macs = 0;
    const auto add = [&macs](const MlpSegment& seg) {
        for (std::size_t l = 0; l + 1 < seg.layer_sizes.size(); ++l)
            macs += static_cast<std::int64_t>(seg.layer_sizes[l]) * seg.layer_sizes[l + 1];
    };
    for (int ue = 0; ue < kNumUes; ++ue) {
        add(ucm_seg[ue]);
        add(dcm_seg[ue]);
        add(action_seg[ue]);
    }
    return 2 * macs;
}

std::vector<double> one_hot(int value, int width) {
    if (value < 0 || value >= width)
        throw Error("one_hot: value " + std::to_string(value) + " outside [0," +
                    std::to_string(width - 1) + "]");
    std::vector<double> v(width, 0.0);
    v[value] = 1.0;
    return v;
}

std::vector<double> encode_buffer_level(int level, int b_max) {
    if (level < 0 || level > b_max)
        throw Error("buffer level " + std::to_string(level) + " outside [0," +
                    std::to_string(b_max) + "]");
    return {static_cast<double>(level) / static_cast<double>(b_max)};
}

std::vector<double> forward_ucm(const NPModel& model, int ue, int buffer_level) {
    return model.ucm_seg[ue].forward(encode_buffer_level(buffer_level, model.arch.b_max));
}

std::vector<double> forward_dcm(const NPModel& model, int ue,
                                std::span<const double> u1, std::span<const double> u2) {
    const int cm = model.arch.cm_size;
    if (static_cast<int>(u1.size()) != cm || static_cast<int>(u2.size()) != cm)
        throw Error("forward_dcm: UCM width mismatch");
    std::vector<double> concat;
    concat.reserve(2 * cm);
    concat.insert(concat.end(), u1.begin(), u1.end());
    concat.insert(concat.end(), u2.begin(), u2.end());
    return model.dcm_seg[ue].forward(concat);
}

UeAction argmax_action(const std::array<double, 3>& q) {
    int best = 0;
    for (int a = 1; a < 3; ++a)
        if (q[a] > q[best]) best = a;
    return static_cast<UeAction>(best);
}

ActionDecision forward_action(const NPModel& model, int ue, std::span<const double> dcm) {
    const std::vector<double> q = model.action_seg[ue].forward(dcm);
    ActionDecision decision;
    for (int a = 0; a < 3; ++a) decision.q_values[a] = q[a];
    decision.action = argmax_action(decision.q_values);
    return decision;
}

CycleForward full_cycle_forward(const NPModel& model,
                                const std::array<int, kNumUes>& buffers) {
    CycleForward fw;
    for (int ue = 0; ue < kNumUes; ++ue) fw.u[ue] = forward_ucm(model, ue, buffers[ue]);
    for (int ue = 0; ue < kNumUes; ++ue)
        fw.d[ue] = forward_dcm(model, ue, fw.u[0], fw.u[1]);
    for (int ue = 0; ue < kNumUes; ++ue) {
        const ActionDecision dec = forward_action(model, ue, fw.d[ue]);
        fw.q[ue] = dec.q_values;
        fw.actions[ue] = dec.action;
    }
    return fw;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32_array(std::ostream& out, const std::vector<double>& values) {
    for (double v : values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("NPM file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("NPM file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::vector<double> read_f32_array(std::istream& in, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = read_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        out[i] = static_cast<double>(f);
    }
    return out;
}

void write_segment(std::ostream& out, const MlpSegment& seg) {
    write_u32(out, static_cast<std::uint32_t>(seg.layer_sizes.size()));
    for (int s : seg.layer_sizes) write_u32(out, static_cast<std::uint32_t>(s));
    write_u32(out, seg.rectified_output ? 1 : 0);
    for (std::size_t l = 0; l < seg.weights.size(); ++l) {
        write_f32_array(out, seg.weights[l]);
        write_f32_array(out, seg.biases[l]);
    }
}

MlpSegment read_segment(std::istream& in) {
    const std::uint32_t n_sizes = read_u32(in);
    if (n_sizes < 2 || n_sizes > 64) throw IoError("NPM file: bad layer count");
    MlpSegment seg;
    seg.layer_sizes.resize(n_sizes);
    for (auto& s : seg.layer_sizes) {
        s = static_cast<int>(read_u32(in));
        if (s < 1 || s > 1 << 20) throw IoError("NPM file: bad layer size");
    }
    seg.rectified_output = read_u32(in) != 0;
    for (std::size_t l = 0; l + 1 < seg.layer_sizes.size(); ++l) {
        const std::size_t in_w = static_cast<std::size_t>(seg.layer_sizes[l]);
        const std::size_t out_w = static_cast<std::size_t>(seg.layer_sizes[l + 1]);
        seg.weights.push_back(read_f32_array(in, in_w * out_w));
        seg.biases.push_back(read_f32_array(in, out_w));
    }
    return seg;
}

void write_adam(std::ostream& out, const AdamState& state) {
    write_u64(out, static_cast<std::uint64_t>(state.step));
    for (std::size_t l = 0; l < state.m_w.size(); ++l) {
        write_f32_array(out, state.m_w[l]);
        write_f32_array(out, state.v_w[l]);
        write_f32_array(out, state.m_b[l]);
        write_f32_array(out, state.v_b[l]);
    }
}

AdamState read_adam(std::istream& in, const MlpSegment& seg) {
    AdamState state = AdamState::zeros_like(seg);
    state.step = static_cast<std::int64_t>(read_u64(in));
    for (std::size_t l = 0; l < state.m_w.size(); ++l) {
        state.m_w[l] = read_f32_array(in, state.m_w[l].size());
        state.v_w[l] = read_f32_array(in, state.v_w[l].size());
        state.m_b[l] = read_f32_array(in, state.m_b[l].size());
        state.v_b[l] = read_f32_array(in, state.v_b[l].size());
    }
    return state;
}

}  // namespace

void save_npm(const NPModel& model, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, model.training ? kFlagTrainingState : 0);
    write_u32(out, static_cast<std::uint32_t>(model.arch.b_max));
    write_u32(out, static_cast<std::uint32_t>(model.arch.hidden));
    write_u32(out, static_cast<std::uint32_t>(model.arch.cm_size));
    for (int ue = 0; ue < kNumUes; ++ue) write_segment(out, model.ucm_seg[ue]);
    for (int ue = 0; ue < kNumUes; ++ue) write_segment(out, model.dcm_seg[ue]);
    for (int ue = 0; ue < kNumUes; ++ue) write_segment(out, model.action_seg[ue]);
    if (model.training) {
        const auto& tr = *model.training;
        write_u64(out, static_cast<std::uint64_t>(tr.global_step));
        for (int ue = 0; ue < kNumUes; ++ue) write_segment(out, tr.target_ucm[ue]);
        for (int ue = 0; ue < kNumUes; ++ue) write_segment(out, tr.target_dcm[ue]);
        for (int ue = 0; ue < kNumUes; ++ue) write_segment(out, tr.target_action[ue]);
        for (int ue = 0; ue < kNumUes; ++ue) write_adam(out, tr.adam_ucm[ue]);
        for (int ue = 0; ue < kNumUes; ++ue) write_adam(out, tr.adam_dcm[ue]);
        for (int ue = 0; ue < kNumUes; ++ue) write_adam(out, tr.adam_action[ue]);
    }
    if (!out) throw IoError("failed writing NPM stream");
}

void save_npm(const NPModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    save_npm(model, out);
}

std::vector<unsigned char> save_npm_bytes(const NPModel& model) {
    std::ostringstream out(std::ios::binary);
    save_npm(model, out);
    const std::string s = out.str();
    return std::vector<unsigned char>(s.begin(), s.end());
}

NPModel load_npm(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not an NPM file (bad magic)");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw IoError("unsupported NPM version " + std::to_string(version));
    const std::uint32_t flags = read_u32(in);

    NPModel model;
    model.arch.b_max = static_cast<int>(read_u32(in));
    model.arch.hidden = static_cast<int>(read_u32(in));
    model.arch.cm_size = static_cast<int>(read_u32(in));
    for (int ue = 0; ue < kNumUes; ++ue) model.ucm_seg[ue] = read_segment(in);
    for (int ue = 0; ue < kNumUes; ++ue) model.dcm_seg[ue] = read_segment(in);
    for (int ue = 0; ue < kNumUes; ++ue) model.action_seg[ue] = read_segment(in);
    if (flags & kFlagTrainingState) {
        NPModel::TrainingState tr;
        tr.global_step = static_cast<std::int64_t>(read_u64(in));
        for (int ue = 0; ue < kNumUes; ++ue) tr.target_ucm[ue] = read_segment(in);
        for (int ue = 0; ue < kNumUes; ++ue) tr.target_dcm[ue] = read_segment(in);
        for (int ue = 0; ue < kNumUes; ++ue) tr.target_action[ue] = read_segment(in);
        for (int ue = 0; ue < kNumUes; ++ue) tr.adam_ucm[ue] = read_adam(in, model.ucm_seg[ue]);
        for (int ue = 0; ue < kNumUes; ++ue) tr.adam_dcm[ue] = read_adam(in, model.dcm_seg[ue]);
        for (int ue = 0; ue < kNumUes; ++ue)
            tr.adam_action[ue] = read_adam(in, model.action_seg[ue]);
        model.training = std::move(tr);
    }
    in.peek();
    if (!in.eof()) throw IoError("NPM file: trailing bytes (size mismatch)");

    if (model.ucm_seg[0].input_size() != model.arch.input_width() ||
        model.ucm_seg[0].output_size() != model.arch.cm_size ||
        model.dcm_seg[0].input_size() != 2 * model.arch.cm_size ||
        model.action_seg[0].output_size() != 3) {
        throw IoError("NPM file: segment shapes disagree with architecture header");
    }
    return model;
}

NPModel load_npm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open NPM file: " + path);
    return load_npm(in);
}

std::string npm_content_hash(const NPModel& model) {
    const std::vector<unsigned char> bytes = save_npm_bytes(model);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

ActionPair NpmPolicy::act(const EnvState& state, Rng& rng) {
    (void)rng;
    return full_cycle_forward(*model_, state.buffers).actions;
}

}  // namespace semproto
