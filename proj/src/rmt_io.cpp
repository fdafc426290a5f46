#include "radiomap/rmt_io.hpp"

#include "radiomap/file_util.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace radiomap {

namespace {

static_assert(std::endian::native == std::endian::little, "RMT1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'M', 'T', '1'};

template <typename T>
void append_pod(std::vector<std::uint8_t>& out, T value)
{
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T read_pod(const std::vector<std::uint8_t>& in, std::size_t offset)
{
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    return value;
}

} // namespace

std::size_t RawTensor::element_count() const
{
    std::size_t n = 1;
    for (auto d : dims)
        n *= d;
    return n;
}

std::vector<std::uint8_t> encode_rmt(const RawTensor& t)
{
    if (t.dims.size() > 255)
        throw std::invalid_argument("RMT1: rank exceeds 255");
    if (t.data.size() != t.element_count())
        throw std::invalid_argument("RMT1: payload size " + std::to_string(t.data.size()) +
                                    " does not match dimensions (" + std::to_string(t.element_count()) + ")");

    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.push_back(static_cast<std::uint8_t>(t.dtype));
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims)
        append_pod<std::uint32_t>(out, d);

    const std::size_t width = t.dtype == DType::f32 ? 4 : 8;
    out.reserve(out.size() + width * t.data.size());
    if (t.dtype == DType::f32) {
        for (double v : t.data)
            append_pod<float>(out, static_cast<float>(v));
    } else {
        for (double v : t.data)
            append_pod<double>(out, v);
    }
    return out;
}

RawTensor decode_rmt(const std::vector<std::uint8_t>& bytes, const std::string& origin)
{
    if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw std::runtime_error(origin + ": bad magic, not an RMT1 tensor file");

    RawTensor t;
    const std::uint8_t code = bytes[4];
    if (code == 1)
        t.dtype = DType::f32;
    else if (code == 2)
        t.dtype = DType::f64;
    else
        throw std::runtime_error(origin + ": unsupported dtype code " + std::to_string(code));

    const std::size_t rank = bytes[5];
    std::size_t offset = 6;
    if (bytes.size() < offset + 4 * rank)
        throw std::runtime_error(origin + ": truncated header");
    t.dims.resize(rank);
    for (std::size_t r = 0; r < rank; ++r, offset += 4)
        t.dims[r] = read_pod<std::uint32_t>(bytes, offset);

    const std::size_t n = t.element_count();
    const std::size_t width = t.dtype == DType::f32 ? 4 : 8;
    if (bytes.size() != offset + n * width)
        throw std::runtime_error(origin + ": payload is " + std::to_string(bytes.size() - offset) +
                                 " bytes, expected " + std::to_string(n * width));
    t.data.resize(n);
    for (std::size_t k = 0; k < n; ++k, offset += width)
        t.data[k] = t.dtype == DType::f32 ? static_cast<double>(read_pod<float>(bytes, offset))
                                          : read_pod<double>(bytes, offset);
    return t;
}

void write_rmt(const std::filesystem::path& path, const RawTensor& t)
{
    write_file_atomic(path, encode_rmt(t));
}

RawTensor read_rmt(const std::filesystem::path& path)
{
    return decode_rmt(read_file_bytes(path), path.string());
}

} // namespace radiomap
