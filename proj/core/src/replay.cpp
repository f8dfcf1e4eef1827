#include "semproto/replay.hpp"

#include <cstring>
#include <fstream>

#include "semproto/errors.hpp"

namespace semproto {

namespace {
constexpr char kMagic[8] = {'S', 'P', 'M', 'E', 'M', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("memory file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("memory file truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}
}  // namespace

EpisodicMemory::EpisodicMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
    slots_.reserve(capacity_);
}

void EpisodicMemory::push(Transition t) {
    if (size_ < capacity_) {
        slots_.push_back(std::move(t));
        ++size_;
        head_ = size_ % capacity_;
    } else {
        slots_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& EpisodicMemory::at(std::size_t index) const {
    if (index >= size_) throw Error("EpisodicMemory index out of range");
    if (size_ < capacity_) return slots_[index];
    return slots_[(head_ + index) % capacity_];
}

void EpisodicMemory::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(capacity_));
    write_u32(out, static_cast<std::uint32_t>(size_));
    const std::uint32_t cm = size_ ? static_cast<std::uint32_t>(at(0).u[0].size()) : 0;
    write_u32(out, cm);
    for (std::size_t k = 0; k < size_; ++k) {
        const Transition& t = at(k);
        for (int i = 0; i < kNumUes; ++i) write_u32(out, static_cast<std::uint32_t>(t.b[i]));
        for (int i = 0; i < kNumUes; ++i)
            write_u32(out, static_cast<std::uint32_t>(t.b_next[i]));
        for (int i = 0; i < kNumUes; ++i) {
            if (t.u[i].size() != cm || t.d[i].size() != cm)
                throw IoError("memory record CM width mismatch");
            for (double v : t.u[i]) write_f64(out, v);
            for (double v : t.d[i]) write_f64(out, v);
            for (double v : t.q[i]) write_f64(out, v);
        }
        write_u32(out, static_cast<std::uint32_t>(t.actions[0]));
        write_u32(out, static_cast<std::uint32_t>(t.actions[1]));
        write_f64(out, t.reward);
        write_u32(out, t.terminal ? 1 : 0);
    }
    if (!out) throw IoError("failed writing memory file: " + path);
}

EpisodicMemory EpisodicMemory::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open memory file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a memory file (bad magic): " + path);
    if (read_u32(in) != kVersion) throw IoError("unsupported memory file version");
    const std::uint32_t capacity = read_u32(in);
    const std::uint32_t count = read_u32(in);
    const std::uint32_t cm = read_u32(in);
    if (count > capacity) throw IoError("memory file: count exceeds capacity");

    EpisodicMemory memory(capacity);
    for (std::uint32_t k = 0; k < count; ++k) {
        Transition t;
        for (int i = 0; i < kNumUes; ++i) t.b[i] = static_cast<int>(read_u32(in));
        for (int i = 0; i < kNumUes; ++i) t.b_next[i] = static_cast<int>(read_u32(in));
        for (int i = 0; i < kNumUes; ++i) {
            t.u[i].resize(cm);
            t.d[i].resize(cm);
            for (auto& v : t.u[i]) v = read_f64(in);
            for (auto& v : t.d[i]) v = read_f64(in);
            for (auto& v : t.q[i]) v = read_f64(in);
        }
        t.actions[0] = static_cast<UeAction>(read_u32(in));
        t.actions[1] = static_cast<UeAction>(read_u32(in));
        t.reward = read_f64(in);
        t.terminal = read_u32(in) != 0;
        memory.push(std::move(t));
    }
    in.peek();
    if (!in.eof()) throw IoError("memory file: trailing bytes");
    return memory;
}

}  // namespace semproto
