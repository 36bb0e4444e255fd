#include "tfmseg/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tfmseg/errors.hpp"

namespace tfmseg {

namespace {

using nlohmann::json;

constexpr std::uint16_t kFormatVersion = 1;
constexpr std::uint16_t kElementF64 = 1;

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    using U = std::make_unsigned_t<T>;
    U u;
    std::memcpy(&u, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(u >> (8 * i));
    put_bytes(out, bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) fail(ErrorCode::parse_error, "unexpected end of file in series header");
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(bytes[i]) << (8 * i);
    T value;
    std::memcpy(&value, &u, sizeof(T));
    return value;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    return in;
}

json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (Index c = 0; c < m.cols(); ++c)
        for (Index r = 0; r < m.rows(); ++r) data.push_back(m(r, c));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
        fail(ErrorCode::parse_error, "matrix payload does not match its shape");
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) m(r, c) = data[i++].get<double>();
    return m;
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

double double_or_nan(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

std::vector<Index> modes_to_disk(const std::vector<Index>& modes) {
    std::vector<Index> out;
    out.reserve(modes.size());
    for (Index k : modes) out.push_back(k + 1);
    return out;
}

std::vector<Index> modes_from_disk(const json& j) {
    std::vector<Index> out;
    for (const auto& v : j) {
        const auto k = v.get<Index>();
        if (k < 1) fail(ErrorCode::parse_error, "modes on disk are 1-based");
        out.push_back(k - 1);
    }
    return out;
}

}  // namespace

SeriesFormat parse_series_format(const std::string& name) {
    if (name == "binary") return SeriesFormat::binary;
    if (name == "csv") return SeriesFormat::csv;
    fail(ErrorCode::config_error, "unknown series format '" + name + "', expected binary or csv");
}

void save_series_binary(const TensorSeries& s, const std::string& path) {
    if (s.dims.empty()) fail(ErrorCode::bad_argument, "series has no modes");
    auto out = open_output(path, std::ios::out | std::ios::binary);
    put_bytes(out, "TFTS", 4);
    put_le<std::uint16_t>(out, kFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims.size()));
    for (Index d : s.dims) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.length()));
    put_le<std::uint16_t>(out, kElementF64);
    put_le<std::uint8_t>(out, s.has_mask() ? 1 : 0);
    const Index p = s.cell_count();
    for (Index t = 0; t < s.length(); ++t)
        for (Index i = 0; i < p; ++i) {
            double v = s.values(i, t);
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            put_le<std::uint64_t>(out, bits);
        }
    if (s.has_mask()) {
        for (Index t = 0; t < s.length(); ++t)
            for (Index i = 0; i < p; ++i) put_le<std::uint8_t>(out, s.mask(i, t));
    }
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

TensorSeries load_series_binary(const std::string& path) {
    auto in = open_input(path, std::ios::in | std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TFTS", 4) != 0)
        fail(ErrorCode::parse_error, "not a TFTS series file: bad magic");
    const auto version = get_le<std::uint16_t>(in);
    if (version != kFormatVersion)
        fail(ErrorCode::parse_error, "unsupported series format version " + std::to_string(version));
    const auto order = get_le<std::uint32_t>(in);
    if (order == 0 || order > 16) fail(ErrorCode::parse_error, "implausible mode count in header");
    Dims dims(order);
    Index p = 1;
    for (auto& d : dims) {
        d = static_cast<Index>(get_le<std::uint64_t>(in));
        if (d < 1 || p > (Index{1} << 40) / d)
            fail(ErrorCode::parse_error, "implausible dimensions in header");
        p *= d;
    }
    const auto length = static_cast<Index>(get_le<std::uint64_t>(in));
    if (length < 1) fail(ErrorCode::parse_error, "nonpositive length in header");
    const auto tag = get_le<std::uint16_t>(in);
    if (tag != kElementF64)
        fail(ErrorCode::parse_error, "unsupported element type tag " + std::to_string(tag));
    const auto mask_flag = get_le<std::uint8_t>(in);
    if (mask_flag > 1) fail(ErrorCode::parse_error, "mask flag must be 0 or 1");

    TensorSeries s;
    s.dims = dims;
    s.values.resize(p, length);
    for (Index t = 0; t < length; ++t)
        for (Index i = 0; i < p; ++i) {
            const auto bits = get_le<std::uint64_t>(in);
            double v;
            std::memcpy(&v, &bits, 8);
            s.values(i, t) = v;
        }
    if (mask_flag == 1) {
        s.mask.resize(p, length);
        for (Index t = 0; t < length; ++t)
            for (Index i = 0; i < p; ++i) s.mask(i, t) = get_le<std::uint8_t>(in);
    }
    in.peek();
    if (!in.eof()) fail(ErrorCode::parse_error, "trailing bytes after series payload");
    return s;
}

void save_series_csv(const TensorSeries& s, const std::string& path) {
    if (s.dims.empty()) fail(ErrorCode::bad_argument, "series has no modes");
    auto out = open_output(path);
    out.precision(17);
    out << "t";
    for (std::size_t k = 0; k < s.dims.size(); ++k) out << ",i_" << (k + 1);
    out << ",value\n";
    const Index p = s.cell_count();
    std::vector<Index> idx(s.dims.size());
    for (Index t = 0; t < s.length(); ++t) {
        for (Index i = 0; i < p; ++i) {
            if (s.has_mask() && s.mask(i, t) == 0) continue;
            Index rem = i;
            for (std::size_t k = 0; k < s.dims.size(); ++k) {
                idx[k] = rem % s.dims[k];
                rem /= s.dims[k];
            }
            out << (t + 1);
            for (Index ik : idx) out << ',' << (ik + 1);
            out << ',' << s.values(i, t) << '\n';
        }
    }
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

namespace {

struct CsvShape {
    std::size_t order = 0;
    Index length = 0;
    Dims dims;
};

// One parsed data row: time, cell indices (still 1-based), value.
bool parse_csv_row(const std::string& line, std::size_t order, Index& t, std::vector<Index>& idx,
                   double& value, std::string& problem) {
    std::size_t pos = 0;
    const auto next_field = [&](std::string& field) {
        if (pos == std::string::npos) return false;
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            field = line.substr(pos);
            pos = std::string::npos;
        } else {
            field = line.substr(pos, comma - pos);
            pos = comma + 1;
        }
        return true;
    };
    const auto parse_index = [&](const std::string& field, Index& out_value) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(field, &used);
            if (used != field.size() || v < 1) return false;
            out_value = static_cast<Index>(v);
            return true;
        } catch (...) {
            return false;
        }
    };
    std::string field;
    if (!next_field(field) || !parse_index(field, t)) {
        problem = "bad t field";
        return false;
    }
    idx.resize(order);
    for (std::size_t k = 0; k < order; ++k) {
        if (!next_field(field) || !parse_index(field, idx[k])) {
            problem = "bad i_" + std::to_string(k + 1) + " field";
            return false;
        }
    }
    if (!next_field(field)) {
        problem = "missing value field";
        return false;
    }
    try {
        std::size_t used = 0;
        value = std::stod(field, &used);
        if (used != field.size()) {
            problem = "bad value field";
            return false;
        }
    } catch (...) {
        problem = "bad value field";
        return false;
    }
    if (pos != std::string::npos) {
        problem = "too many fields";
        return false;
    }
    return true;
}

CsvShape csv_header_shape(std::istream& in, const std::string& path) {
    std::string header;
    if (!std::getline(in, header))
        fail(ErrorCode::parse_error, "'" + path + "' is empty; expected a header row");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = header.find(',', pos);
        if (comma == std::string::npos) {
            cols.push_back(header.substr(pos));
            break;
        }
        cols.push_back(header.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (cols.size() < 3 || cols.front() != "t" || cols.back() != "value")
        fail(ErrorCode::parse_error, "header must be t,i_1,...,i_K,value");
    CsvShape shape;
    shape.order = cols.size() - 2;
    for (std::size_t k = 0; k < shape.order; ++k)
        if (cols[k + 1] != "i_" + std::to_string(k + 1))
            fail(ErrorCode::parse_error, "header must be t,i_1,...,i_K,value");
    shape.dims.assign(shape.order, 0);
    return shape;
}

}  // namespace

TensorSeries load_series_csv(const std::string& path) {
    CsvShape shape;
    {
        auto in = open_input(path);
        shape = csv_header_shape(in, path);
        std::string line;
        std::size_t line_no = 1;
        Index t = 0;
        std::vector<Index> idx;
        double value = 0.0;
        std::string problem;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (!parse_csv_row(line, shape.order, t, idx, value, problem))
                fail(ErrorCode::parse_error,
                     "line " + std::to_string(line_no) + " of '" + path + "': " + problem);
            shape.length = std::max(shape.length, t);
            for (std::size_t k = 0; k < shape.order; ++k)
                shape.dims[k] = std::max(shape.dims[k], idx[k]);
        }
    }
    if (shape.length == 0) fail(ErrorCode::parse_error, "'" + path + "' contains no data rows");

    TensorSeries s;
    s.dims = shape.dims;
    const Index p = dim_product(shape.dims);
    s.values.setConstant(p, shape.length, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> seen(static_cast<std::size_t>(p) * static_cast<std::size_t>(shape.length), 0);

    auto in = open_input(path);
    (void)csv_header_shape(in, path);
    std::string line;
    std::size_t line_no = 1;
    Index t = 0;
    std::vector<Index> idx;
    double value = 0.0;
    std::string problem;
    Index observed = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!parse_csv_row(line, shape.order, t, idx, value, problem))
            fail(ErrorCode::parse_error,
                 "line " + std::to_string(line_no) + " of '" + path + "': " + problem);
        Index cell = 0;
        Index stride = 1;
        for (std::size_t k = 0; k < shape.order; ++k) {
            cell += (idx[k] - 1) * stride;
            stride *= shape.dims[k];
        }
        const std::size_t flat = static_cast<std::size_t>(cell) +
                                 static_cast<std::size_t>(p) * static_cast<std::size_t>(t - 1);
        if (seen[flat]) {
            std::ostringstream msg;
            msg << "line " << line_no << " of '" << path << "': duplicate cell t=" << t;
            for (std::size_t k = 0; k < shape.order; ++k) msg << (k == 0 ? ", i=(" : ",") << idx[k];
            msg << ")";
            fail(ErrorCode::parse_error, msg.str());
        }
        seen[flat] = 1;
        s.values(cell, t - 1) = value;
        ++observed;
    }

    if (observed < p * shape.length) {
        s.mask.resize(p, shape.length);
        for (Index col = 0; col < shape.length; ++col)
            for (Index i = 0; i < p; ++i)
                s.mask(i, col) =
                    seen[static_cast<std::size_t>(i) +
                         static_cast<std::size_t>(p) * static_cast<std::size_t>(col)]
                        ? 1
                        : 0;
    }
    return s;
}

void save_series(const TensorSeries& s, const std::string& path, SeriesFormat format) {
    if (format == SeriesFormat::binary)
        save_series_binary(s, path);
    else
        save_series_csv(s, path);
}

TensorSeries load_series(const std::string& path, SeriesFormat format) {
    return format == SeriesFormat::binary ? load_series_binary(path) : load_series_csv(path);
}

void save_pi_coefficients(const PiCoefficients& c, const std::string& path) {
    auto out = open_output(path);
    out.precision(17);
    out << "intercept=" << c.intercept << '\n'
        << "sqrt_d=" << c.sqrt_d << '\n'
        << "sqrt_logT=" << c.sqrt_log_t << '\n'
        << "loglogT_over_sqrtlogT=" << c.loglog_t_over_sqrt_log_t << '\n'
        << "inv_sqrtlogT=" << c.inv_sqrt_log_t << '\n';
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

namespace {

// key=value lines; blank lines and lines starting with '#' are skipped.
std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + " of '" + path +
                                             "': expected key=value");
        entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return entries;
}

double parse_double_field(const std::string& value, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        fail(ErrorCode::parse_error, "bad numeric value for " + what + ": '" + value + "'");
    }
}

long long parse_int_field(const std::string& value, const std::string& what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        fail(ErrorCode::parse_error, "bad integer value for " + what + ": '" + value + "'");
    }
}

Dims parse_dims_field(const std::string& value, const std::string& what) {
    Dims dims;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = value.find(',', pos);
        const std::string piece =
            comma == std::string::npos ? value.substr(pos) : value.substr(pos, comma - pos);
        dims.push_back(static_cast<Index>(parse_int_field(piece, what)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return dims;
}

}  // namespace

PiCoefficients load_pi_coefficients(const std::string& path) {
    PiCoefficients c;
    bool have[5] = {false, false, false, false, false};
    for (const auto& [key, value] : read_kv_file(path)) {
        if (key == "intercept") {
            c.intercept = parse_double_field(value, key);
            have[0] = true;
        } else if (key == "sqrt_d") {
            c.sqrt_d = parse_double_field(value, key);
            have[1] = true;
        } else if (key == "sqrt_logT") {
            c.sqrt_log_t = parse_double_field(value, key);
            have[2] = true;
        } else if (key == "loglogT_over_sqrtlogT") {
            c.loglog_t_over_sqrt_log_t = parse_double_field(value, key);
            have[3] = true;
        } else if (key == "inv_sqrtlogT") {
            c.inv_sqrt_log_t = parse_double_field(value, key);
            have[4] = true;
        } else {
            fail(ErrorCode::parse_error, "unknown coefficient '" + key + "' in '" + path + "'");
        }
    }
    static const char* names[5] = {"intercept", "sqrt_d", "sqrt_logT", "loglogT_over_sqrtlogT",
                                   "inv_sqrtlogT"};
    for (int i = 0; i < 5; ++i)
        if (!have[i])
            fail(ErrorCode::parse_error,
                 std::string("coefficient file '") + path + "' is missing " + names[i]);
    return c;
}

void save_scenario(const SimScenario& sc, const std::string& path) {
    auto out = open_output(path);
    out.precision(17);
    out << "scenario=" << scenario_name(sc.scenario) << '\n' << "T=" << sc.length << '\n';
    out << "dims=";
    for (std::size_t k = 0; k < sc.dims.size(); ++k) out << (k ? "," : "") << sc.dims[k];
    out << '\n' << "ranks=";
    for (std::size_t k = 0; k < sc.ranks.size(); ++k) out << (k ? "," : "") << sc.ranks[k];
    out << '\n'
        << "rho=" << sc.rho << '\n'
        << "spacing=" << spacing_name(sc.spacing) << '\n'
        << "missing=" << (sc.missing ? 1 : 0) << '\n'
        << "store_common=" << (sc.store_common ? 1 : 0) << '\n'
        << "seed=" << sc.seed << '\n'
        << "stream=" << sc.stream << '\n';
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

SimScenario load_scenario(const std::string& path) {
    SimScenario sc;
    for (const auto& [key, value] : read_kv_file(path)) {
        if (key == "scenario")
            sc.scenario = parse_scenario(value);
        else if (key == "T")
            sc.length = static_cast<Index>(parse_int_field(value, key));
        else if (key == "dims")
            sc.dims = parse_dims_field(value, key);
        else if (key == "ranks")
            sc.ranks = parse_dims_field(value, key);
        else if (key == "rho")
            sc.rho = parse_double_field(value, key);
        else if (key == "spacing")
            sc.spacing = parse_spacing(value);
        else if (key == "missing")
            sc.missing = parse_int_field(value, key) != 0;
        else if (key == "store_common")
            sc.store_common = parse_int_field(value, key) != 0;
        else if (key == "seed")
            sc.seed = static_cast<std::uint64_t>(parse_int_field(value, key));
        else if (key == "stream")
            sc.stream = static_cast<std::uint64_t>(parse_int_field(value, key));
        else
            fail(ErrorCode::parse_error, "unknown scenario key '" + key + "' in '" + path + "'");
    }
    return sc;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
    json j;
    j["kind"] = "tfmseg-truth";
    j["version"] = 1;
    j["locations"] = gt.locations;
    json sets = json::array();
    for (const auto& m : gt.mode_sets) sets.push_back(modes_to_disk(m));
    j["mode_sets"] = std::move(sets);
    json base = json::array();
    for (const auto& m : gt.base_loadings) base.push_back(matrix_to_json(m));
    j["base_loadings"] = std::move(base);
    json transforms = json::array();
    for (const auto& change : gt.transforms) {
        json per_mode = json::array();
        for (const auto& m : change) per_mode.push_back(matrix_to_json(m));
        transforms.push_back(std::move(per_mode));
    }
    j["transforms"] = std::move(transforms);
    json segs = json::array();
    for (const auto& seg : gt.segment_loadings) {
        json per_mode = json::array();
        for (const auto& m : seg) per_mode.push_back(matrix_to_json(m));
        segs.push_back(std::move(per_mode));
    }
    j["segment_loadings"] = std::move(segs);
    json sizes = json::array();
    for (const auto& s : gt.sizes) sizes.push_back(json{{"per_mode", s.per_mode}, {"total", s.total}});
    j["sizes"] = std::move(sizes);
    if (gt.factors.size() > 0) j["factors"] = matrix_to_json(gt.factors);
    if (gt.common.size() > 0) j["common"] = matrix_to_json(gt.common);

    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

GroundTruth load_ground_truth(const std::string& path) {
    auto in = open_input(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, "'" + path + "': " + e.what());
    }
    try {
        if (j.value("kind", "") != "tfmseg-truth")
            fail(ErrorCode::parse_error, "'" + path + "' is not a ground truth document");
        GroundTruth gt;
        gt.locations = j.at("locations").get<std::vector<Index>>();
        for (const auto& m : j.at("mode_sets")) gt.mode_sets.push_back(modes_from_disk(m));
        for (const auto& m : j.at("base_loadings")) gt.base_loadings.push_back(matrix_from_json(m));
        for (const auto& change : j.at("transforms")) {
            std::vector<Matrix> per_mode;
            for (const auto& m : change) per_mode.push_back(matrix_from_json(m));
            gt.transforms.push_back(std::move(per_mode));
        }
        for (const auto& seg : j.at("segment_loadings")) {
            std::vector<Matrix> per_mode;
            for (const auto& m : seg) per_mode.push_back(matrix_from_json(m));
            gt.segment_loadings.push_back(std::move(per_mode));
        }
        for (const auto& s : j.at("sizes")) {
            ChangeSize cs;
            cs.per_mode = s.at("per_mode").get<std::vector<double>>();
            cs.total = s.at("total").get<double>();
            gt.sizes.push_back(std::move(cs));
        }
        if (j.contains("factors")) gt.factors = matrix_from_json(j.at("factors"));
        if (j.contains("common")) gt.common = matrix_from_json(j.at("common"));
        return gt;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, "'" + path + "': " + e.what());
    }
}

namespace {

json coefficients_to_json(const PiCoefficients& c) {
    return json{{"intercept", c.intercept},
                {"sqrt_d", c.sqrt_d},
                {"sqrt_logT", c.sqrt_log_t},
                {"loglogT_over_sqrtlogT", c.loglog_t_over_sqrt_log_t},
                {"inv_sqrtlogT", c.inv_sqrt_log_t}};
}

PiCoefficients coefficients_from_json(const json& j) {
    PiCoefficients c;
    c.intercept = j.at("intercept").get<double>();
    c.sqrt_d = j.at("sqrt_d").get<double>();
    c.sqrt_log_t = j.at("sqrt_logT").get<double>();
    c.loglog_t_over_sqrt_log_t = j.at("loglogT_over_sqrtlogT").get<double>();
    c.inv_sqrt_log_t = j.at("inv_sqrtlogT").get<double>();
    return c;
}

json interval_to_json(const Interval& iv) {
    return json{{"a", iv.a}, {"b", iv.b}, {"level", iv.level}};
}

Interval interval_from_json(const json& j) {
    Interval iv;
    iv.a = j.at("a").get<Index>();
    iv.b = j.at("b").get<Index>();
    iv.level = j.at("level").get<int>();
    return iv;
}

}  // namespace

std::string report_to_json(const ReportDocument& doc) {
    const ChangePointReport& det = doc.detection;
    json j;
    j["kind"] = "tfmseg-report";
    j["version"] = 1;
    j["series"] = json{{"dims", det.dims}, {"length", det.series_length}};

    json config;
    config["ranks"] = det.ranks;
    config["ranks_estimated"] = det.ranks_estimated;
    config["mu"] = det.mu;
    config["depth"] = det.depth;
    config["trim"] = det.trim;
    config["bandwidth"] = det.bandwidth;
    config["pi"] = det.pi;
    config["pi_coefficients"] = coefficients_to_json(det.pi_coefficients);
    config["pi_source"] = det.pi_source;
    if (doc.has_mode_id) {
        config["zeta"] = doc.mode_id.zeta;
        config["zeta_multiplier"] = doc.mode_id.zeta_multiplier;
        config["zeta_scale"] = doc.mode_id.scale;
        config["practical_endpoints"] = doc.mode_id.practical_endpoints;
    }
    j["config"] = std::move(config);

    json weight = json::array();
    for (Index i = 0; i < det.weight.size(); ++i) weight.push_back(det.weight(i));
    j["weight"] = std::move(weight);

    if (doc.has_mode_id && doc.mode_id.attributions.size() != det.estimates.size())
        fail(ErrorCode::bad_argument, "report has a mode attribution count mismatch");

    json changes = json::array();
    for (std::size_t i = 0; i < det.estimates.size(); ++i) {
        const auto& est = det.estimates[i];
        json change;
        change["location"] = est.location;
        change["detector"] = finite_or_null(est.detector_value);
        if (est.source.b > est.source.a) change["interval"] = interval_to_json(est.source);
        if (doc.has_mode_id) {
            const auto& attr = doc.mode_id.attributions[i];
            change["endpoints"] = json{{"lower", attr.endpoints.lower},
                                       {"upper", attr.endpoints.upper},
                                       {"lower_fallback", attr.endpoints.lower_fallback},
                                       {"upper_fallback", attr.endpoints.upper_fallback}};
            json scaled = json::array();
            for (double raw : attr.xi_norms) scaled.push_back(raw / doc.mode_id.scale);
            change["scaled_norms"] = std::move(scaled);
            change["modes"] = modes_to_disk(attr.modes);
        }
        changes.push_back(std::move(change));
    }
    j["changes"] = std::move(changes);

    if (doc.has_mode_informed) {
        json mi;
        json seg_ranks = json::array();
        for (const auto& r : doc.mode_informed.segment_ranks) seg_ranks.push_back(r);
        mi["segment_ranks"] = std::move(seg_ranks);
        if (!doc.mode_informed.truth_distances.empty()) {
            json dist = json::array();
            for (const auto& row : doc.mode_informed.truth_distances) dist.push_back(row);
            mi["truth_distances"] = std::move(dist);
        }
        j["mode_informed"] = std::move(mi);
    }

    json timing;
    timing["detect_seconds"] = finite_or_null(det.seconds < 0 ? std::nan("") : det.seconds);
    timing["total_seconds"] =
        finite_or_null(doc.total_seconds < 0 ? std::nan("") : doc.total_seconds);
    j["timing"] = std::move(timing);

    return j.dump(2) + "\n";
}

ReportDocument report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, std::string("report: ") + e.what());
    }
    try {
        if (j.value("kind", "") != "tfmseg-report")
            fail(ErrorCode::parse_error, "not a report document");
        ReportDocument doc;
        ChangePointReport& det = doc.detection;
        det.dims = j.at("series").at("dims").get<Dims>();
        det.series_length = j.at("series").at("length").get<Index>();
        const json& config = j.at("config");
        det.ranks = config.at("ranks").get<std::vector<Index>>();
        det.ranks_estimated = config.at("ranks_estimated").get<bool>();
        det.mu = config.at("mu").get<double>();
        det.depth = config.at("depth").get<int>();
        det.trim = config.at("trim").get<Index>();
        det.bandwidth = config.at("bandwidth").get<Index>();
        det.pi = config.at("pi").get<double>();
        det.pi_coefficients = coefficients_from_json(config.at("pi_coefficients"));
        det.pi_source = config.at("pi_source").get<std::string>();
        doc.has_mode_id = config.contains("zeta");
        if (doc.has_mode_id) {
            doc.mode_id.zeta = config.at("zeta").get<double>();
            doc.mode_id.zeta_multiplier = config.at("zeta_multiplier").get<double>();
            doc.mode_id.scale = config.at("zeta_scale").get<double>();
            doc.mode_id.practical_endpoints = config.at("practical_endpoints").get<bool>();
        }
        const json& weight = j.at("weight");
        det.weight.resize(static_cast<Index>(weight.size()));
        for (Index i = 0; i < det.weight.size(); ++i)
            det.weight(i) = weight[static_cast<std::size_t>(i)].get<double>();
        for (const json& change : j.at("changes")) {
            ChangePointEstimate est;
            est.location = change.at("location").get<Index>();
            est.detector_value = double_or_nan(change.at("detector"));
            if (change.contains("interval")) est.source = interval_from_json(change.at("interval"));
            det.estimates.push_back(est);
            if (doc.has_mode_id) {
                ModeAttribution attr;
                attr.location = est.location;
                const json& ep = change.at("endpoints");
                attr.endpoints.lower = ep.at("lower").get<Index>();
                attr.endpoints.upper = ep.at("upper").get<Index>();
                attr.endpoints.lower_fallback = ep.at("lower_fallback").get<bool>();
                attr.endpoints.upper_fallback = ep.at("upper_fallback").get<bool>();
                for (const auto& v : change.at("scaled_norms"))
                    attr.xi_norms.push_back(v.get<double>() * doc.mode_id.scale);
                attr.modes = modes_from_disk(change.at("modes"));
                doc.mode_id.attributions.push_back(std::move(attr));
            }
        }
        if (j.contains("mode_informed")) {
            doc.has_mode_informed = true;
            const json& mi = j.at("mode_informed");
            for (const auto& r : mi.at("segment_ranks"))
                doc.mode_informed.segment_ranks.push_back(r.get<std::vector<Index>>());
            if (mi.contains("truth_distances"))
                for (const auto& row : mi.at("truth_distances"))
                    doc.mode_informed.truth_distances.push_back(row.get<std::vector<double>>());
        }
        const json& timing = j.at("timing");
        const double det_seconds = double_or_nan(timing.at("detect_seconds"));
        det.seconds = std::isnan(det_seconds) ? -1.0 : det_seconds;
        const double total = double_or_nan(timing.at("total_seconds"));
        doc.total_seconds = std::isnan(total) ? -1.0 : total;
        return doc;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_error, std::string("report: ") + e.what());
    }
}

void save_report(const ReportDocument& doc, const std::string& path) {
    auto out = open_output(path);
    out << report_to_json(doc);
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

ReportDocument load_report(const std::string& path) {
    auto in = open_input(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return report_from_json(buffer.str());
}

void save_metrics_csv(const std::vector<ReplicationRecord>& records, Index q_true,
                      const std::string& path) {
    auto out = open_output(path);
    out.precision(17);
    out << "replication,q_true,q_hat,q_diff,matched";
    for (Index jj = 1; jj <= q_true; ++jj) out << ",accuracy_" << jj;
    for (Index jj = 1; jj <= q_true; ++jj) out << ",tpr_" << jj;
    for (Index jj = 1; jj <= q_true; ++jj) out << ",fpr_" << jj;
    out << ",seconds\n";
    for (std::size_t n = 0; n < records.size(); ++n) {
        const auto& rec = records[n];
        out << (n + 1) << ',' << rec.detection.q_true << ',' << rec.detection.q_hat << ','
            << rec.detection.q_diff << ',' << (rec.detection.matched ? 1 : 0);
        for (Index jj = 0; jj < q_true; ++jj) {
            const auto idx = static_cast<std::size_t>(jj);
            const bool acc = idx < rec.detection.accurate.size() && rec.detection.accurate[idx];
            out << ',' << (acc ? 1 : 0);
        }
        for (Index jj = 0; jj < q_true; ++jj) {
            const auto idx = static_cast<std::size_t>(jj);
            if (rec.has_mode_id && rec.detection.matched && idx < rec.mode_id.tpr.size())
                out << ',' << rec.mode_id.tpr[idx];
            else
                out << ",";
        }
        for (Index jj = 0; jj < q_true; ++jj) {
            const auto idx = static_cast<std::size_t>(jj);
            if (rec.has_mode_id && rec.detection.matched && idx < rec.mode_id.fpr.size())
                out << ',' << rec.mode_id.fpr[idx];
            else
                out << ",";
        }
        out << ',' << rec.seconds << '\n';
    }
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

}  // namespace tfmseg
