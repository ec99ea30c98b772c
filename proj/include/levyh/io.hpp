#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hmatrix.hpp"

namespace levyh {

//
// block tree as JSON: {rows: [b, e), cols: [b, e), kind, rank?, children?}
//
inline nlohmann::json structure_json(const Block& b)
{
    nlohmann::json j;
    j["rows"] = {b.row_begin, b.row_begin + b.rows};
    j["cols"] = {b.col_begin, b.col_begin + b.cols};
    switch (b.kind) {
    case BlockKind::dense:
        j["kind"] = "dense";
        break;
    case BlockKind::lowrank:
        j["kind"] = "lowrank";
        j["rank"] = b.R.rank();
        break;
    case BlockKind::hier:
        j["kind"]     = "hier";
        j["children"] = nlohmann::json::array();
        for (const auto& c : b.child)
            j["children"].push_back(structure_json(*c));
        break;
    }
    return j;
}

inline nlohmann::json structure_json(const HMatrix& H)
{
    const auto     rep = memory_report(H);
    nlohmann::json j;
    j["size"]           = {H.rows(), H.cols()};
    j["stored_scalars"] = rep.stored_scalars;
    j["dense_blocks"]   = rep.dense_blocks;
    j["lowrank_blocks"] = rep.lowrank_blocks;
    j["max_rank"]       = rep.max_rank;
    j["root"]           = structure_json(*H.root);
    return j;
}

//
// CSV with '#' metadata lines, one header row, LF endings
//
class CsvWriter
{
public:
    explicit CsvWriter(std::ostream& os)
        : _os(os)
    {
        _os.precision(17);
    }

    CsvWriter& meta(const std::string& key, const std::string& value)
    {
        LEVYH_REQUIRE(_columns == 0, "csv: metadata must precede the header");
        _os << "# " << key << ": " << value << '\n';
        return *this;
    }

    CsvWriter& header(const std::vector<std::string>& cols)
    {
        LEVYH_REQUIRE(_columns == 0 && !cols.empty(), "csv: header written twice or empty");
        _columns = cols.size();
        write(cols);
        return *this;
    }

    CsvWriter& row(const std::vector<double>& values)
    {
        LEVYH_REQUIRE(values.size() == _columns, "csv: row width does not match header");
        for (std::size_t k = 0; k < values.size(); ++k) {
            LEVYH_REQUIRE(std::isfinite(values[k]), "csv: non-finite cell in column " + std::to_string(k));
            _os << (k ? "," : "") << values[k];
        }
        _os << '\n';
        return *this;
    }

    CsvWriter& row(const std::vector<std::string>& values)
    {
        LEVYH_REQUIRE(values.size() == _columns, "csv: row width does not match header");
        write(values);
        return *this;
    }

private:
    void write(const std::vector<std::string>& cells)
    {
        for (std::size_t k = 0; k < cells.size(); ++k)
            _os << (k ? "," : "") << cells[k];
        _os << '\n';
    }

    std::ostream& _os;
    std::size_t   _columns = 0;
};

// median wall time in seconds over `runs` calls after `warmup` discarded calls
template <typename F>
double median_time(F&& f, int runs = 3, int warmup = 1)
{
    LEVYH_REQUIRE(runs > 0 && warmup >= 0, "median_time: need at least one run");
    for (int k = 0; k < warmup; ++k)
        f();
    std::vector<double> t;
    for (int k = 0; k < runs; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(t.begin(), t.begin() + runs / 2, t.end());
    return t[std::size_t(runs / 2)];
}

// FNV-1a of a configuration string, as 16 hex digits
inline std::string config_hash(const std::string& key)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

//
// vectors cached on disk under dir/<hash>.bin
//
class VectorCache
{
public:
    explicit VectorCache(std::filesystem::path dir)
        : _dir(std::move(dir))
    {}

    std::filesystem::path path(const std::string& key) const { return _dir / (config_hash(key) + ".bin"); }

    std::optional<Vector> load(const std::string& key) const
    {
        std::ifstream in(path(key), std::ios::binary);
        if (!in)
            return std::nullopt;
        std::uint64_t n = 0;
        std::uint64_t len = 0;
        in.read(reinterpret_cast<char*>(&len), sizeof len);
        std::string stored(len, '\0');
        in.read(stored.data(), std::streamsize(len));
        in.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!in || stored != key)
            return std::nullopt;
        Vector v(static_cast<Index>(n));
        in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double)));
        if (!in)
            return std::nullopt;
        return v;
    }

    void store(const std::string& key, const Vector& v) const
    {
        std::filesystem::create_directories(_dir);
        const auto    tmp = path(key).string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            LEVYH_REQUIRE(bool(out), "cache: cannot write " + tmp);
            const std::uint64_t len = key.size(), n = std::uint64_t(v.size());
            out.write(reinterpret_cast<const char*>(&len), sizeof len);
            out.write(key.data(), std::streamsize(len));
            out.write(reinterpret_cast<const char*>(&n), sizeof n);
            out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(n * sizeof(double)));
        }
        std::filesystem::rename(tmp, path(key));
    }

    template <typename F>
    Vector get_or_compute(const std::string& key, F&& compute) const
    {
        if (auto v = load(key))
            return *v;
        Vector v = compute();
        store(key, v);
        return v;
    }

private:
    std::filesystem::path _dir;
};

}// namespace levyh
