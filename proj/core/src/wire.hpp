#pragma once

// Little-endian wire helpers shared by the sequence and checkpoint codecs.
// Values are packed byte by byte so the on-disk layout is host-independent.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "dest/errors.hpp"

namespace dest::wire {

inline void put_u32(std::string& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& b, double d) {
    uint64_t u;
    std::memcpy(&u, &d, 8);
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

// Cursor over a fully loaded file; every read is bounds-checked against the
// buffer and reports the originating path on failure.
class Reader {
public:
    Reader(std::string bytes, std::string origin)
        : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

    static Reader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        if (in.bad()) throw IoError("error reading " + path);
        return Reader(std::move(bytes), path);
    }

    void need(size_t n) const {
        if (pos_ + n > bytes_.size())
            throw DataError(origin_ + ": truncated (wanted " + std::to_string(n) +
                            " more bytes at offset " + std::to_string(pos_) + ")");
    }

    std::string raw(size_t n) {
        need(n);
        std::string out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        uint64_t u = 0;
        for (int i = 0; i < 8; ++i)
            u |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        double d;
        std::memcpy(&d, &u, 8);
        return d;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }
    size_t remaining() const { return bytes_.size() - pos_; }
    const std::string& origin() const { return origin_; }

private:
    std::string bytes_;
    std::string origin_;
    size_t pos_ = 0;
};

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("error writing " + path);
}

} // namespace dest::wire
