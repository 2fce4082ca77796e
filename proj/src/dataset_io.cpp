#include "lrinfer/dataset_io.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "lrinfer/common.hpp"

namespace lrinfer {

std::string format_double(double v) {
    char buf[64];
    // Try increasing precision until the decimal round-trips exactly;
    // 17 significant digits always do.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

constexpr char kDatasetHeader[] =
    "animal_id,trial_index,stimulus,choice,reward,label";
constexpr char kLatentsHeader[] =
    "animal_id,trial_index,w_stim,w_bias,dw_stim,dw_bias";
constexpr char kSlicesHeader[] = "stimulus,w_stim,correct,dw_stim,dw_bias";

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

[[noreturn]] void malformed(const std::string& path, long line,
                            const std::string& what) {
    throw ConfigError(path + ": line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void invalid(const std::string& path, long line,
                          const std::string& what) {
    throw DataError(path + ": line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double(const std::string& field, const std::string& path,
                    long line, const char* name) {
    if (field.empty()) malformed(path, line, std::string(name) + " is empty");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE ||
        !std::isfinite(v))
        malformed(path, line,
                  std::string(name) + " is not a finite number: '" + field +
                      "'");
    return v;
}

long parse_long(const std::string& field, const std::string& path, long line,
                const char* name) {
    if (field.empty()) malformed(path, line, std::string(name) + " is empty");
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(field.c_str(), &end, 10);
    if (end != field.c_str() + field.size() || errno == ERANGE)
        malformed(path, line,
                  std::string(name) + " is not an integer: '" + field + "'");
    return v;
}

int parse_bit(const std::string& field, const std::string& path, long line,
              const char* name) {
    const long v = parse_long(field, path, line, name);
    if (v != 0 && v != 1)
        invalid(path, line,
                std::string(name) + " must be 0 or 1, got " + field);
    return static_cast<int>(v);
}

struct CsvReader {
    std::ifstream in;
    std::string path;
    long line_no = 0;

    explicit CsvReader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw ConfigError("cannot open '" + p + "' for reading");
    }

    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;  // ignore blank lines
            return true;
        }
        return false;
    }

    void expect_header(const char* header) {
        std::string line;
        if (!next(line)) malformed(path, 1, "missing header");
        if (line != header)
            malformed(path, line_no,
                      std::string("bad header, expected '") + header + "'");
    }
};

}  // namespace

void write_dataset_csv(const std::string& path,
                       const std::vector<Session>& pool) {
    std::ofstream out = open_out(path);
    out << kDatasetHeader << '\n';
    for (const Session& s : pool) {
        for (std::size_t t = 0; t < s.trials.size(); ++t) {
            const Trial& tr = s.trials[t];
            out << s.animal_id << ',' << t << ','
                << format_double(tr.stimulus) << ',' << tr.choice << ','
                << tr.reward << ',' << tr.label << '\n';
        }
    }
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

void write_latents_csv(const std::string& path,
                       const std::vector<Session>& pool) {
    std::ofstream out = open_out(path);
    out << kLatentsHeader << '\n';
    for (const Session& s : pool) {
        if (!s.has_latents() || s.weights.size() != s.trials.size() ||
            s.applied_dw.size() != s.trials.size())
            throw DataError("session '" + s.animal_id +
                            "' has no latent trajectory to write");
        for (std::size_t t = 0; t < s.trials.size(); ++t) {
            out << s.animal_id << ',' << t << ','
                << format_double(s.weights[t][0]) << ','
                << format_double(s.weights[t][1]) << ','
                << format_double(s.applied_dw[t][0]) << ','
                << format_double(s.applied_dw[t][1]) << '\n';
        }
    }
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::vector<Session> load_dataset_csv(const std::string& path) {
    CsvReader reader(path);
    reader.expect_header(kDatasetHeader);

    std::vector<Session> pool;
    std::set<std::string> closed;  // animals whose block has ended
    std::string line;
    while (reader.next(line)) {
        const auto fields = split_fields(line);
        if (fields.size() != 6)
            malformed(path, reader.line_no,
                      "expected 6 fields, got " +
                          std::to_string(fields.size()));
        const std::string& id = fields[0];
        if (id.empty()) malformed(path, reader.line_no, "empty animal_id");

        if (pool.empty() || pool.back().animal_id != id) {
            if (closed.count(id))
                invalid(path, reader.line_no,
                        "animal '" + id + "' appears in two separate blocks");
            if (!pool.empty()) closed.insert(pool.back().animal_id);
            pool.emplace_back();
            pool.back().animal_id = id;
        }
        Session& s = pool.back();

        const long idx =
            parse_long(fields[1], path, reader.line_no, "trial_index");
        if (idx != static_cast<long>(s.trials.size()))
            invalid(path, reader.line_no,
                    "trial_index must be contiguous from 0: expected " +
                        std::to_string(s.trials.size()) + ", got " +
                        std::to_string(idx));

        Trial tr;
        tr.stimulus =
            parse_double(fields[2], path, reader.line_no, "stimulus");
        tr.choice = parse_bit(fields[3], path, reader.line_no, "choice");
        tr.reward = parse_bit(fields[4], path, reader.line_no, "reward");
        tr.label = parse_bit(fields[5], path, reader.line_no, "label");
        if (tr.reward != reward_of(tr.choice, tr.label))
            invalid(path, reader.line_no,
                    "reward must equal [choice == label]");
        s.trials.push_back(tr);
    }
    if (pool.empty()) throw DataError(path + ": no trials");
    return pool;
}

void load_latents_csv(const std::string& path, std::vector<Session>& pool) {
    CsvReader reader(path);
    reader.expect_header(kLatentsHeader);

    // Parsed into staging storage and attached only once the whole file
    // checked out, so a failed load never leaves sessions half-populated.
    std::vector<std::vector<Vec>> weights(pool.size()), applied(pool.size());

    std::size_t si = 0, ti = 0;
    std::string line;
    while (reader.next(line)) {
        const auto fields = split_fields(line);
        if (fields.size() != 6)
            malformed(path, reader.line_no,
                      "expected 6 fields, got " +
                          std::to_string(fields.size()));
        while (si < pool.size() && ti >= pool[si].trials.size()) {
            ++si;
            ti = 0;
        }
        if (si >= pool.size())
            invalid(path, reader.line_no, "more latent rows than trials");
        const Session& s = pool[si];
        if (fields[0] != s.animal_id)
            invalid(path, reader.line_no,
                    "latent row for animal '" + fields[0] +
                        "' does not match dataset order (expected '" +
                        s.animal_id + "')");
        const long idx =
            parse_long(fields[1], path, reader.line_no, "trial_index");
        if (idx != static_cast<long>(ti))
            invalid(path, reader.line_no,
                    "latent trial_index mismatch: expected " +
                        std::to_string(ti) + ", got " + std::to_string(idx));
        if (ti == 0) {
            weights[si].assign(s.trials.size(), Vec(2, 0.0));
            applied[si].assign(s.trials.size(), Vec(2, 0.0));
        }
        weights[si][ti][0] =
            parse_double(fields[2], path, reader.line_no, "w_stim");
        weights[si][ti][1] =
            parse_double(fields[3], path, reader.line_no, "w_bias");
        applied[si][ti][0] =
            parse_double(fields[4], path, reader.line_no, "dw_stim");
        applied[si][ti][1] =
            parse_double(fields[5], path, reader.line_no, "dw_bias");
        ++ti;
    }
    while (si < pool.size() && ti >= pool[si].trials.size()) {
        ++si;
        ti = 0;
    }
    if (si < pool.size())
        throw DataError(path + ": latent rows missing for animal '" +
                        pool[si].animal_id + "'");
    for (std::size_t i = 0; i < pool.size(); ++i) {
        pool[i].weights = std::move(weights[i]);
        pool[i].applied_dw = std::move(applied[i]);
    }
}

void write_slices_csv(const std::string& path,
                      const std::vector<SliceRow>& rows) {
    std::ofstream out = open_out(path);
    out << kSlicesHeader << '\n';
    for (const SliceRow& r : rows) {
        out << format_double(r.stimulus) << ',' << format_double(r.w_stim)
            << ',' << r.correct << ',' << format_double(r.dw_stim) << ','
            << format_double(r.dw_bias) << '\n';
    }
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::vector<SliceRow> load_slices_csv(const std::string& path) {
    CsvReader reader(path);
    reader.expect_header(kSlicesHeader);
    std::vector<SliceRow> rows;
    std::string line;
    while (reader.next(line)) {
        const auto fields = split_fields(line);
        if (fields.size() != 5)
            malformed(path, reader.line_no,
                      "expected 5 fields, got " +
                          std::to_string(fields.size()));
        SliceRow r;
        r.stimulus = parse_double(fields[0], path, reader.line_no, "stimulus");
        r.w_stim = parse_double(fields[1], path, reader.line_no, "w_stim");
        r.correct = parse_bit(fields[2], path, reader.line_no, "correct");
        r.dw_stim = parse_double(fields[3], path, reader.line_no, "dw_stim");
        r.dw_bias = parse_double(fields[4], path, reader.line_no, "dw_bias");
        rows.push_back(r);
    }
    if (rows.empty()) throw DataError(path + ": no slice rows");
    return rows;
}

std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr) != 1)
        throw NumericError("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw NumericError("SHA-256 context allocation failed");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw NumericError("SHA-256 init failed");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        if (got > 0 &&
            EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw NumericError("SHA-256 update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    const int ok = EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    if (ok != 1) throw NumericError("SHA-256 final failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace lrinfer
