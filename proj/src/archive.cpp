#include "rgtn/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "rgtn/train.hpp"

namespace rgtn {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'T', 'N', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void put_le(std::string& buf, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& buf, std::size_t pos, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    return v;
}

bool valid_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') return false;
    return true;
}

}  // namespace

const Tensor* Archive::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

std::optional<std::string> Archive::meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    return std::nullopt;
}

void write_archive(std::ostream& out, const Archive& archive) {
    if (!valid_token(archive.kind)) throw ArchiveError("archive kind must be a single word");
    std::string header = "kind " + archive.kind + "\n";
    for (const auto& [k, v] : archive.meta) {
        if (!valid_token(k) || v.find('\n') != std::string::npos) {
            throw ArchiveError("archive metadata '" + k + "' must be a word with a one-line value");
        }
        header += "meta " + k + " " + v + "\n";
    }
    for (const auto& [name, t] : archive.tensors) {
        if (!valid_token(name)) throw ArchiveError("tensor name '" + name + "' must be a single word");
        header += "tensor " + name + " " + std::to_string(t.order());
        for (Index d : t.shape().dims()) header += " " + std::to_string(d);
        header += "\n";
    }

    std::string buf(kMagic, sizeof kMagic);
    put_le(buf, Archive::kVersion, 4);
    put_le(buf, header.size(), 8);
    buf += header;
    for (const auto& entry : archive.tensors)
        for (double v : entry.second.values()) put_le(buf, std::bit_cast<std::uint64_t>(v), 8);
    put_le(buf, fnv1a(buf), 8);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ArchiveError("failed to write archive");
}

Archive read_archive(std::istream& in) {
    const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (buf.size() < sizeof kMagic || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
        throw ArchiveError("not an archive (bad magic bytes)");
    }
    if (buf.size() < 20) throw ArchiveError("archive truncated in the preamble");
    const auto version = get_le(buf, 8, 4);
    if (version != Archive::kVersion) {
        throw ArchiveError("unsupported archive version " + std::to_string(version) +
                           " (expected " + std::to_string(Archive::kVersion) + ")");
    }
    if (buf.size() < 28) throw ArchiveError("archive truncated");
    const std::size_t body = buf.size() - 8;
    if (fnv1a(buf.substr(0, body)) != get_le(buf, body, 8)) {
        throw ArchiveError("archive integrity check failed (checksum mismatch)");
    }
    const auto header_len = get_le(buf, 12, 8);
    if (header_len > body - 20) throw ArchiveError("archive header length exceeds file size");
    std::istringstream header(buf.substr(20, header_len));
    std::size_t pos = 20 + header_len;

    Archive archive;
    std::string line;
    while (std::getline(header, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "kind") {
            ls >> archive.kind;
        } else if (tag == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            archive.meta.emplace_back(key, value);
        } else if (tag == "tensor") {
            std::string name;
            std::size_t order = 0;
            if (!(ls >> name >> order)) throw ArchiveError("malformed tensor record '" + line + "'");
            std::vector<Index> dims(order);
            for (auto& d : dims)
                if (!(ls >> d)) throw ArchiveError("malformed tensor record '" + line + "'");
            Tensor t{Shape(dims)};
            if ((body - pos) / 8 < t.size()) throw ArchiveError("archive payload truncated");
            for (Index i = 0; i < t.size(); ++i, pos += 8)
                t[i] = std::bit_cast<double>(get_le(buf, pos, 8));
            archive.tensors.emplace_back(name, std::move(t));
        } else if (!tag.empty()) {
            throw ArchiveError("unknown header record '" + tag + "'");
        }
    }
    if (pos != body) throw ArchiveError("archive payload has trailing bytes");
    return archive;
}

void save_archive(const std::string& path, const Archive& archive) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArchiveError("cannot open '" + path + "' for writing");
    write_archive(out, archive);
}

Archive load_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError("cannot open '" + path + "'");
    return read_archive(in);
}

bool is_archive_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char head[sizeof kMagic] = {};
    in.read(head, sizeof head);
    return in.gcount() == sizeof head && std::memcmp(head, kMagic, sizeof kMagic) == 0;
}

void write_text_tensor(std::ostream& out, const Tensor& t) {
    out << "shape";
    for (Index d : t.shape().dims()) out << ' ' << d;
    out << '\n';
    for (Index i = 0; i < t.size(); ++i) out << format_double(t[i]) << '\n';
}

Tensor read_text_tensor(std::istream& in) {
    std::string line;
    std::stringstream content;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        content << line << '\n';
    }
    std::string word;
    if (!std::getline(content, line)) throw std::runtime_error("tensor file is empty");
    std::istringstream head(line);
    if (!(head >> word) || word != "shape") {
        throw std::runtime_error("tensor file must start with a 'shape' line");
    }
    std::vector<Index> dims;
    std::string tok;
    while (head >> tok) {
        if (tok.find_first_not_of("0123456789") != std::string::npos) {
            throw std::runtime_error("tensor file: bad extent '" + tok + "'");
        }
        dims.push_back(std::stoull(tok));
    }
    Tensor t{Shape(dims)};
    Index i = 0;
    while (content >> tok) {
        if (i >= t.size()) throw std::runtime_error("tensor file has more values than its shape");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw std::runtime_error("tensor file: bad value '" + tok + "'");
        t[i++] = v;
    }
    if (i != t.size()) {
        throw std::runtime_error("tensor file has " + std::to_string(i) + " values, shape needs " +
                                 std::to_string(t.size()));
    }
    return t;
}

}  // namespace rgtn
