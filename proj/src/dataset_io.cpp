#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "imd2/error.hpp"
#include "imd2/signal.hpp"

namespace imd2 {

namespace {

constexpr std::array<char, 4> kMagic{'I', 'M', 'D', '2'};
constexpr std::string_view kCsvHeader = "tx_i,tx_q,rx";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::array<unsigned char, sizeof(T)> b;
        std::memcpy(b.data(), &v, sizeof(T));
        std::reverse(b.begin(), b.end());
        std::memcpy(&v, b.data(), sizeof(T));
    }
    return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
    v = byteswap_if_big(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& v) {
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) return false;
    v = byteswap_if_big(v);
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_field(std::string_view field, std::size_t line) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("cannot parse number '" + std::string(field) + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(field) + "'", line);
    return v;
}

Dataset load_csv(const std::filesystem::path& path, double rate) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty file", 1);
    ++lineno;
    if (trim(line) != kCsvHeader) throw ParseError("expected header '" + std::string(kCsvHeader) + "'", lineno);

    std::vector<cdouble> tx;
    std::vector<double> rx;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view row = trim(line);
        if (row.empty()) continue;
        std::array<std::string_view, 3> fields;
        std::size_t count = 0;
        while (true) {
            const auto comma = row.find(',');
            if (count == fields.size()) throw ParseError("too many columns", lineno);
            fields[count++] = row.substr(0, comma);
            if (comma == std::string_view::npos) break;
            row.remove_prefix(comma + 1);
        }
        if (count != 3) throw ParseError("expected 3 columns, got " + std::to_string(count), lineno);
        tx.emplace_back(parse_field(fields[0], lineno), parse_field(fields[1], lineno));
        rx.push_back(parse_field(fields[2], lineno));
    }
    if (tx.empty()) throw ParseError("no samples", lineno);
    return Dataset(ComplexSequence(std::move(tx), rate), RealSequence(std::move(rx), rate));
}

Dataset load_binary(const std::filesystem::path& path, double rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ParseError("bad magic, expected IMD2");
    std::uint32_t n = 0;
    if (!read_le(in, n)) throw ParseError("truncated header");
    if (n == 0) throw ParseError("no samples");
    std::vector<cdouble> tx(n);
    std::vector<double> rx(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        double re, im, r;
        if (!read_le(in, re) || !read_le(in, im) || !read_le(in, r))
            throw ParseError("truncated at record " + std::to_string(i));
        if (!std::isfinite(re) || !std::isfinite(im) || !std::isfinite(r))
            throw ParseError("non-finite value at record " + std::to_string(i));
        tx[i] = {re, im};
        rx[i] = r;
    }
    if (in.peek() != std::ifstream::traits_type::eof()) throw ParseError("trailing bytes after last record");
    return Dataset(ComplexSequence(std::move(tx), rate), RealSequence(std::move(rx), rate));
}

} // namespace

DatasetFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".bin" ? DatasetFormat::binary : DatasetFormat::csv;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, double sample_rate_hz) {
    return format == DatasetFormat::csv ? load_csv(path, sample_rate_hz) : load_binary(path, sample_rate_hz);
}

void save_dataset(const std::filesystem::path& path, const Dataset& data, DatasetFormat format) {
    const auto tx = data.tx().samples();
    const auto rx = data.rx().samples();
    if (format == DatasetFormat::csv) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << kCsvHeader << '\n';
        char buf[96];
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", tx[i].real(), tx[i].imag(), rx[i]);
            out.write(buf, len);
        }
        if (!out) throw Error("write failed: " + path.string());
        return;
    }
    if (tx.size() > UINT32_MAX) throw InvalidArgument("dataset too long for binary format");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kMagic.data(), kMagic.size());
    write_le(out, static_cast<std::uint32_t>(tx.size()));
    for (std::size_t i = 0; i < tx.size(); ++i) {
        write_le(out, tx[i].real());
        write_le(out, tx[i].imag());
        write_le(out, rx[i]);
    }
    if (!out) throw Error("write failed: " + path.string());
}

} // namespace imd2
