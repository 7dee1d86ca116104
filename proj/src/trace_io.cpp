#include "zq/trace_io.hpp"

#include <cstring>
#include <stdexcept>

namespace zq {

namespace {

constexpr char kMagic[8] = {'Z', 'Q', 'T', 'R', 'A', 'C', 'E', '1'};

template <typename T>
void put_le(std::string& buf, T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void put_le_double(std::string& buf, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    put_le(buf, bits);
}

template <typename T>
T get_le(const unsigned char* p) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<U>(p[i]) << (8 * i);
    return static_cast<T>(u);
}

double get_le_double(const unsigned char* p) {
    const std::uint64_t bits = get_le<std::uint64_t>(p);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::size_t record_size(int n) {
    return 8 + static_cast<std::size_t>(n) * 8 + 4 + 4 +
           static_cast<std::size_t>(n) * 2;
}

} // namespace

std::uint64_t params_hash(const SchemeParams& p) {
    std::string canon = "K=" + std::to_string(p.K) + ";N=" + std::to_string(p.N) +
                        ";g=" + p.g.str() + ";p=" + std::to_string(p.p) +
                        ";q=" + std::to_string(p.q_exp) +
                        ";L=" + std::to_string(p.L) +
                        ";m0=" + std::to_string(p.delta0_exp) +
                        ";beta=" + std::to_string(p.beta) +
                        ";eps=" + std::to_string(p.eps);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

TraceWriter::TraceWriter(const std::filesystem::path& path, int n,
                         const SchemeParams& params)
    : out_(path, std::ios::binary), n_(n) {
    if (!out_) throw std::runtime_error("cannot open trace file for writing: " +
                                        path.string());
    std::string header;
    header.append(kMagic, sizeof(kMagic));
    put_le(header, static_cast<std::uint32_t>(n));
    put_le(header, static_cast<std::uint32_t>(0));
    put_le(header, params_hash(params));
    out_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

void TraceWriter::write(const StepRecord& rec) {
    TraceRecord tr;
    tr.t = rec.t;
    tr.x = rec.x;
    tr.delta_exp = static_cast<std::int32_t>(rec.delta_exp);
    tr.adaptive = rec.adaptive;
    tr.fixed = rec.fixed;
    write(tr);
}

void TraceWriter::write(const TraceRecord& rec) {
    if (static_cast<int>(rec.x.size()) != n_ ||
        static_cast<int>(rec.fixed.size()) != n_)
        throw std::invalid_argument("trace record dimension mismatch");
    std::string buf;
    buf.reserve(record_size(n_));
    put_le(buf, rec.t);
    for (double v : rec.x) put_le_double(buf, v);
    put_le(buf, rec.delta_exp);
    put_le(buf, rec.adaptive);
    for (std::uint16_t c : rec.fixed) put_le(buf, c);
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    ++count_;
}

TraceReader::TraceReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open trace file: " + path.string());
    unsigned char header[24];
    in_.read(reinterpret_cast<char*>(header), sizeof(header));
    if (in_.gcount() != sizeof(header) ||
        std::memcmp(header, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a trace file: " + path.string());
    n_ = static_cast<int>(get_le<std::uint32_t>(header + 8));
    hash_ = get_le<std::uint64_t>(header + 16);
    if (n_ < 1 || n_ > 1 << 16)
        throw std::runtime_error("trace header carries an invalid dimension");
}

bool TraceReader::next(TraceRecord& rec) {
    const std::size_t size = record_size(n_);
    std::vector<unsigned char> buf(size);
    in_.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(size));
    if (in_.gcount() == 0) return false;
    if (static_cast<std::size_t>(in_.gcount()) != size)
        throw std::runtime_error("truncated trace record");
    const unsigned char* p = buf.data();
    rec.t = get_le<std::uint64_t>(p);
    p += 8;
    rec.x.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i, p += 8) rec.x[i] = get_le_double(p);
    rec.delta_exp = get_le<std::int32_t>(p);
    p += 4;
    rec.adaptive = get_le<std::uint32_t>(p);
    p += 4;
    rec.fixed.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i, p += 2) rec.fixed[i] = get_le<std::uint16_t>(p);
    return true;
}

std::vector<StepRecord> reconstruct_records(const std::filesystem::path& path,
                                            const SystemModel& model,
                                            const SchemeParams& params) {
    TraceReader reader(path);
    if (reader.n() != model.n())
        throw std::runtime_error("trace dimension does not match the model");
    if (reader.hash() != params_hash(params))
        throw std::runtime_error("trace was produced by different parameters");

    const int n = model.n();
    const UniformGrid fixed_grid(params.N, params.delta_N());
    std::vector<StepRecord> records;
    TraceRecord tr;
    std::vector<double> fix_part(static_cast<std::size_t>(n));
    while (reader.next(tr)) {
        StepRecord rec;
        rec.t = tr.t;
        rec.x = tr.x;
        rec.delta_exp = tr.delta_exp;
        rec.delta = params.delta_from_exp(tr.delta_exp);
        rec.adaptive = tr.adaptive;
        rec.fixed = tr.fixed;
        rec.in_view = tr.adaptive != 0;

        const UniformGrid adaptive_grid(params.K, rec.delta);
        rec.e.resize(static_cast<std::size_t>(n));
        rec.xhat.resize(static_cast<std::size_t>(n));
        rec.u.resize(static_cast<std::size_t>(n));
        decode_adaptive(tr.adaptive, adaptive_grid, n, rec.xhat);
        for (int i = 0; i < n; ++i) rec.e[i] = rec.x[i] - rec.xhat[i];
        decode_fixed(tr.fixed, fixed_grid, fix_part);
        for (int i = 0; i < n; ++i) rec.xhat[i] += fix_part[i];
        const double* g = model.gain_rm().data();
        for (int i = 0; i < n; ++i)
            rec.u[i] = -matvec_row(g, n, i, rec.xhat.data());
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace zq
