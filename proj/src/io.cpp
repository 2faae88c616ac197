#include "fsqkd/io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fsqkd {

namespace {

constexpr char kPulseMagic[4] = {'F', 'Q', 'P', 'T'};

void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(os, u);
}

double get_f64(std::istream& is) {
    const std::uint64_t u = get_u64(is);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

std::ofstream open_out(const std::filesystem::path& path, bool append = false) {
    std::ofstream os(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
    return is;
}

} // namespace

void write_tags(const std::filesystem::path& path, std::span<const TimeTag> tags, bool append) {
    auto os = open_out(path, append);
    std::vector<char> buf;
    buf.reserve(tags.size() * 9);
    for (const auto& t : tags) {
        for (int i = 0; i < 8; ++i)
            buf.push_back(static_cast<char>((t.timestamp_ps >> (8 * i)) & 0xFF));
        buf.push_back(static_cast<char>(t.channel));
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<TimeTag> read_tags(const std::filesystem::path& path) {
    auto is = open_in(path);
    is.seekg(0, std::ios::end);
    const std::uint64_t size = static_cast<std::uint64_t>(is.tellg());
    is.seekg(0);
    if (size % 9 != 0)
        throw std::runtime_error("malformed tag file " + path.string() +
                                 ": trailing partial record at byte offset " +
                                 std::to_string(size - size % 9));
    std::vector<char> buf(size);
    is.read(buf.data(), static_cast<std::streamsize>(size));
    std::vector<TimeTag> tags(size / 9);
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data()) + i * 9;
        std::uint64_t ts = 0;
        for (int k = 0; k < 8; ++k) ts |= static_cast<std::uint64_t>(p[k]) << (8 * k);
        tags[i] = {ts, p[8]};
    }
    return tags;
}

namespace {
void put_pulse_header(std::ostream& os, const ProtocolParams& p, std::uint64_t n_slots,
                      bool procedural) {
    os.write(kPulseMagic, 4);
    os.put(1);                          // version
    os.put(procedural ? 1 : 0);
    put_u64(os, n_slots);
    put_f64(os, p.p_z_alice);
    put_f64(os, p.p_mu1);
    put_f64(os, p.mu1_z);
    put_f64(os, p.mu2_z);
    put_f64(os, p.mu1_x);
    put_f64(os, p.mu2_x);
    put_f64(os, p.p_z_bob);
    put_f64(os, p.clock_rate_hz);
}
}

void write_pulse_train(const std::filesystem::path& path, const PulseTrain& train,
                       const ProtocolParams& params) {
    auto os = open_out(path);
    put_pulse_header(os, params, train.size(), false);
    os.write(reinterpret_cast<const char*>(train.codes().data()),
             static_cast<std::streamsize>(train.codes().size()));
}

void write_pulse_tape(const std::filesystem::path& path, const SlotTape& tape,
                      std::uint64_t n_slots) {
    auto os = open_out(path);
    put_pulse_header(os, tape.params(), n_slots, true);
    put_u64(os, tape.seed());
}

PulseFile read_pulse_file(const std::filesystem::path& path) {
    auto is = open_in(path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kPulseMagic, 4) != 0)
        throw std::runtime_error("not a pulse-train file: " + path.string());
    const int version = is.get();
    if (version != 1) throw std::runtime_error("unsupported pulse-train file version");
    const int mode = is.get();

    PulseFile f;
    f.n_slots = get_u64(is);
    f.params.p_z_alice = get_f64(is);
    f.params.p_mu1 = get_f64(is);
    f.params.mu1_z = get_f64(is);
    f.params.mu2_z = get_f64(is);
    f.params.mu1_x = get_f64(is);
    f.params.mu2_x = get_f64(is);
    f.params.p_z_bob = get_f64(is);
    f.params.clock_rate_hz = get_f64(is);
    f.procedural = mode == 1;
    if (f.procedural) {
        f.tape_seed = get_u64(is);
    } else {
        f.train.codes().resize(f.n_slots);
        is.read(reinterpret_cast<char*>(f.train.codes().data()),
                static_cast<std::streamsize>(f.n_slots));
    }
    if (!is) throw std::runtime_error("truncated pulse-train file: " + path.string());
    return f;
}

PulseRecord PulseFile::at(std::uint64_t slot) const {
    if (slot >= n_slots)
        throw std::out_of_range("pulse file: slot beyond recorded range");
    if (procedural) return SlotTape(params, tape_seed).at(slot);
    return train.record(slot);
}

void write_key(const std::filesystem::path& path, const BitVec& key) {
    auto os = open_out(path);
    put_u64(os, key.size());
    std::vector<char> bytes((key.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const std::uint64_t w = key.words()[i / 8];
        bytes[i] = static_cast<char>((w >> (8 * (i % 8))) & 0xFF);
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

BitVec read_key(const std::filesystem::path& path) {
    auto is = open_in(path);
    const std::uint64_t nbits = get_u64(is);
    BitVec key(nbits);
    std::vector<char> bytes((nbits + 7) / 8);
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!is) throw std::runtime_error("truncated key file: " + path.string());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        key.words()[i / 8] |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i]))
                              << (8 * (i % 8));
    return key;
}

nlohmann::json to_json(const DecoyCounts& c) {
    return {
        {"n_z_mu1", c.n_z_mu1}, {"n_z_mu2", c.n_z_mu2},
        {"m_z_mu1", c.m_z_mu1}, {"m_z_mu2", c.m_z_mu2},
        {"n_x_mu1", c.n_x_mu1}, {"n_x_mu2", c.n_x_mu2},
        {"m_x_mu1", c.m_x_mu1}, {"m_x_mu2", c.m_x_mu2},
        {"duration_s", c.duration_s},
    };
}

DecoyCounts decoy_counts_from_json(const nlohmann::json& j) {
    DecoyCounts c;
    c.n_z_mu1 = j.at("n_z_mu1").get<std::uint64_t>();
    c.n_z_mu2 = j.at("n_z_mu2").get<std::uint64_t>();
    c.m_z_mu1 = j.at("m_z_mu1").get<std::uint64_t>();
    c.m_z_mu2 = j.at("m_z_mu2").get<std::uint64_t>();
    c.n_x_mu1 = j.at("n_x_mu1").get<std::uint64_t>();
    c.n_x_mu2 = j.at("n_x_mu2").get<std::uint64_t>();
    c.m_x_mu1 = j.at("m_x_mu1").get<std::uint64_t>();
    c.m_x_mu2 = j.at("m_x_mu2").get<std::uint64_t>();
    c.duration_s = j.at("duration_s").get<double>();
    c.validate();
    return c;
}

nlohmann::json to_json(const KeyBudget& b) {
    return {
        {"s_z0_low", b.s_z0_low}, {"s_z0_up", b.s_z0_up},
        {"s_z1_low", b.s_z1_low}, {"s_x1_low", b.s_x1_low},
        {"v_x1_up", b.v_x1_up},   {"phi_z_up", b.phi_z_up},
        {"lambda_ec", b.lambda_ec}, {"l", b.l},
    };
}

KeyBudget key_budget_from_json(const nlohmann::json& j) {
    KeyBudget b;
    b.s_z0_low = j.at("s_z0_low").get<double>();
    b.s_z0_up = j.at("s_z0_up").get<double>();
    b.s_z1_low = j.at("s_z1_low").get<double>();
    b.s_x1_low = j.at("s_x1_low").get<double>();
    b.v_x1_up = j.at("v_x1_up").get<double>();
    b.phi_z_up = j.at("phi_z_up").get<double>();
    b.lambda_ec = j.at("lambda_ec").get<double>();
    b.l = j.at("l").get<std::uint64_t>();
    return b;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& path) {
    auto is = open_in(path);
    nlohmann::json j;
    is >> j;
    return j;
}

} // namespace fsqkd
