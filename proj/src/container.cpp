#include "sdlr/container.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unistd.h>

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian");

namespace sdlr {
namespace {

constexpr char kMagic[8] = {'S', 'D', 'L', 'R', 'C', 'N', 'T', '\0'};

enum class Kind : std::uint8_t { real = 1, integer = 2, text = 3 };

template <class T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("container: truncated file");
    return value;
}

}  // namespace

void Container::put(const std::string& name, Matrix value) {
    entries_[name] = std::move(value);
}
void Container::put(const std::string& name, const Vector& value) {
    entries_[name] = Matrix(value);
}
void Container::put(const std::string& name, IntMatrix value) {
    entries_[name] = std::move(value);
}
void Container::put_int(const std::string& name, std::int64_t value) {
    entries_[name] = IntMatrix(IntMatrix::Constant(1, 1, value));
}
void Container::put_real(const std::string& name, double value) {
    entries_[name] = Matrix(Matrix::Constant(1, 1, value));
}
void Container::put_text(const std::string& name, std::string value) {
    entries_[name] = std::move(value);
}

bool Container::has(const std::string& name) const {
    return entries_.count(name) != 0;
}

const Container::Entry& Container::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw std::out_of_range("container: no entry named '" + name + "'");
    return it->second;
}

const Matrix& Container::matrix(const std::string& name) const {
    const auto* m = std::get_if<Matrix>(&at(name));
    if (!m) throw std::runtime_error("container: '" + name + "' is not a real matrix");
    return *m;
}

Vector Container::vector(const std::string& name) const {
    const Matrix& m = matrix(name);
    if (m.cols() != 1)
        throw std::runtime_error("container: '" + name + "' is not a column vector");
    return m.col(0);
}

const IntMatrix& Container::int_matrix(const std::string& name) const {
    const auto* m = std::get_if<IntMatrix>(&at(name));
    if (!m) throw std::runtime_error("container: '" + name + "' is not an integer matrix");
    return *m;
}

std::int64_t Container::integer(const std::string& name) const {
    const IntMatrix& m = int_matrix(name);
    if (m.size() != 1) throw std::runtime_error("container: '" + name + "' is not a scalar");
    return m(0, 0);
}

double Container::real(const std::string& name) const {
    const Matrix& m = matrix(name);
    if (m.size() != 1) throw std::runtime_error("container: '" + name + "' is not a scalar");
    return m(0, 0);
}

const std::string& Container::text(const std::string& name) const {
    const auto* s = std::get_if<std::string>(&at(name));
    if (!s) throw std::runtime_error("container: '" + name + "' is not text");
    return *s;
}

void Container::save(const std::filesystem::path& path) const {
    static std::atomic<unsigned> counter{0};
    std::ostringstream suffix;
    suffix << ".tmp." << ::getpid() << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << '.' << counter++;
    std::filesystem::path tmp = path;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("container: cannot open " + tmp.string());
        out.write(kMagic, sizeof kMagic);
        write_pod(out, kVersion);
        write_pod(out, static_cast<std::uint32_t>(entries_.size()));
        for (const auto& [name, entry] : entries_) {
            write_pod(out, static_cast<std::uint16_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            std::visit(
                [&](const auto& value) {
                    using T = std::decay_t<decltype(value)>;
                    if constexpr (std::is_same_v<T, std::string>) {
                        write_pod(out, Kind::text);
                        write_pod(out, static_cast<std::uint64_t>(value.size()));
                        write_pod(out, std::uint64_t{1});
                        out.write(value.data(), static_cast<std::streamsize>(value.size()));
                    } else {
                        write_pod(out, std::is_same_v<T, Matrix> ? Kind::real : Kind::integer);
                        write_pod(out, static_cast<std::uint64_t>(value.rows()));
                        write_pod(out, static_cast<std::uint64_t>(value.cols()));
                        out.write(reinterpret_cast<const char*>(value.data()),
                                  static_cast<std::streamsize>(value.size() * 8));
                    }
                },
                entry);
        }
        if (!out) throw std::runtime_error("container: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Container Container::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("container: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("container: bad magic in " + path.string());
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion)
        throw std::runtime_error("container: unsupported version " + std::to_string(version));
    const auto count = read_pod<std::uint32_t>(in);
    Container c;
    for (std::uint32_t e = 0; e < count; ++e) {
        const auto name_len = read_pod<std::uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto kind = read_pod<Kind>(in);
        const auto rows = read_pod<std::uint64_t>(in);
        const auto cols = read_pod<std::uint64_t>(in);
        switch (kind) {
            case Kind::text: {
                std::string s(rows, '\0');
                in.read(s.data(), static_cast<std::streamsize>(rows));
                c.entries_[name] = std::move(s);
                break;
            }
            case Kind::real: {
                Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
                in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
                c.entries_[name] = std::move(m);
                break;
            }
            case Kind::integer: {
                IntMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
                in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
                c.entries_[name] = std::move(m);
                break;
            }
            default:
                throw std::runtime_error("container: unknown entry kind in " + path.string());
        }
        if (!in) throw std::runtime_error("container: truncated entry '" + name + "'");
    }
    return c;
}

}  // namespace sdlr
