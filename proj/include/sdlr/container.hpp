#pragma once

#include "sdlr/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <variant>

namespace sdlr {

/// Named collection of dense real matrices, integer matrices and text
/// fields with a binary on-disk form (see docs/container_format.md).
///
/// Used for the noise-shaping basis cache, operator dumps and solution dumps.
class Container {
public:
    static constexpr std::uint32_t kVersion = 1;

    void put(const std::string& name, Matrix value);
    void put(const std::string& name, const Vector& value);
    void put(const std::string& name, IntMatrix value);
    void put_int(const std::string& name, std::int64_t value);
    void put_real(const std::string& name, double value);
    void put_text(const std::string& name, std::string value);

    bool has(const std::string& name) const;
    const Matrix& matrix(const std::string& name) const;
    Vector vector(const std::string& name) const;
    const IntMatrix& int_matrix(const std::string& name) const;
    std::int64_t integer(const std::string& name) const;
    double real(const std::string& name) const;
    const std::string& text(const std::string& name) const;

    /// Writes to a temporary sibling file and renames it into place, so a
    /// concurrent reader sees either the old file or the complete new one.
    void save(const std::filesystem::path& path) const;
    static Container load(const std::filesystem::path& path);

    std::size_t size() const { return entries_.size(); }

private:
    using Entry = std::variant<Matrix, IntMatrix, std::string>;
    const Entry& at(const std::string& name) const;
    std::map<std::string, Entry> entries_;
};

}  // namespace sdlr
