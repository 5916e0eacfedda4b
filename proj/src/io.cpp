#include "symshrink/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "symshrink/error.hpp"
#include "symshrink/format.hpp"

namespace symshrink {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
    }
    return out;
}

// Next non-empty line; false at end of input.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

std::string where(const std::string& origin, std::size_t line_no) {
    return origin + ":" + std::to_string(line_no);
}

std::size_t parse_count(const std::string& field, const std::string& context) {
    std::size_t v = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw ConfigError(context + ": expected a non-negative integer, got '" + field + "'");
    }
    return v;
}

std::vector<double> read_numeric_rows(std::istream& in, std::size_t n_rows, std::size_t n_cols,
                                      const std::string& origin, std::size_t& line_no) {
    std::vector<double> values;
    values.reserve(n_rows * n_cols);
    std::string line;
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (!next_line(in, line, line_no)) {
            throw ConfigError(origin + ": expected " + std::to_string(n_rows) + " data rows, found " +
                              std::to_string(r));
        }
        const auto fields = split_fields(line);
        if (fields.size() != n_cols) {
            throw ConfigError(where(origin, line_no) + ": expected " + std::to_string(n_cols) + " fields, found " +
                              std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            const double v = parse_double_field(f, where(origin, line_no));
            if (!std::isfinite(v)) throw ConfigError(where(origin, line_no) + ": non-finite value '" + f + "'");
            values.push_back(v);
        }
    }
    if (next_line(in, line, line_no)) throw ConfigError(where(origin, line_no) + ": unexpected trailing row");
    return values;
}

template <class Fn>
auto with_input(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return fn(in);
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    fn(out);
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

double parse_double_field(const std::string& field, const std::string& context) {
    if (field == "nan") return std::nan("");
    if (field == "inf") return INFINITY;
    if (field == "-inf") return -INFINITY;
    double v = 0.0;
    const auto* begin = field.data();
    const auto* end = begin + field.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw ConfigError(context + ": not a number: '" + field + "'");
    }
    return v;
}

void write_matrix_csv(const SymmetricMatrix& a, std::ostream& out) {
    const std::size_t m = a.dim();
    out << m << '\n';
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) out << (j ? "," : "") << format_double(a(i, j));
        out << '\n';
    }
}

SymmetricMatrix read_matrix_csv(std::istream& in, const std::string& origin) {
    std::size_t line_no = 0;
    std::string line;
    if (!next_line(in, line, line_no)) throw ConfigError(origin + ": empty matrix file");
    const std::size_t m = parse_count(split_fields(line).front(), where(origin, line_no));
    if (m == 0 || split_fields(line).size() != 1) throw ConfigError(where(origin, line_no) + ": bad dimension line");
    const auto values = read_numeric_rows(in, m, m, origin, line_no);
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(values[i * m + j] - values[j * m + i]) > 1e-12 * scale) {
                throw ConfigError(origin + ": matrix is not symmetric at (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
            }
    return SymmetricMatrix(m, values);
}

void write_dataset_csv(const Dataset& d, std::ostream& out) {
    out << d.n_obs() << ',' << d.dim() << '\n';
    for (std::size_t r = 0; r < d.n_obs(); ++r) {
        const auto row = d.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, const std::string& origin) {
    std::size_t line_no = 0;
    std::string line;
    if (!next_line(in, line, line_no)) throw ConfigError(origin + ": empty dataset file");
    const auto head = split_fields(line);
    if (head.size() != 2) throw ConfigError(where(origin, line_no) + ": expected 'N,M'");
    const std::size_t n = parse_count(head[0], where(origin, line_no));
    const std::size_t m = parse_count(head[1], where(origin, line_no));
    if (n == 0 || m == 0) throw ConfigError(where(origin, line_no) + ": N and M must be positive");
    auto values = read_numeric_rows(in, n, m, origin, line_no);
    return Dataset(n, m, std::move(values));
}

void write_estimator_csv(const EstimatorResult& r, std::ostream& out) {
    out << "estimator,alpha,group,flags\n";
    out << to_string(r.estimator) << ',' << (r.alpha ? format_double(*r.alpha) : "") << ','
        << r.group_name.value_or("") << ',' << r.flags_text() << '\n';
    write_matrix_csv(r.matrix, out);
}

EstimatorResult read_estimator_csv(std::istream& in, const std::string& origin) {
    std::size_t line_no = 0;
    std::string line;
    if (!next_line(in, line, line_no) || line.rfind("estimator,alpha,group,flags", 0) != 0) {
        throw ConfigError(origin + ": missing 'estimator,alpha,group,flags' header");
    }
    if (!next_line(in, line, line_no)) throw ConfigError(origin + ": missing estimator metadata");
    const auto f = split_fields(line);
    if (f.size() != 4) throw ConfigError(where(origin, line_no) + ": expected 4 metadata fields");
    EstimatorResult r;
    r.estimator = parse_estimator_name(f[0]);
    if (!f[1].empty()) r.alpha = parse_double_field(f[1], where(origin, line_no));
    if (!f[2].empty()) r.group_name = f[2];
    r.flags = parse_flags(f[3]);
    r.matrix = read_matrix_csv(in, origin);
    return r;
}

CsvTable read_csv_table(std::istream& in, const std::string& origin) {
    CsvTable t;
    std::size_t line_no = 0;
    std::string line;
    if (!next_line(in, line, line_no)) throw ConfigError(origin + ": empty CSV");
    t.header = split_fields(line);
    while (next_line(in, line, line_no)) {
        auto fields = split_fields(line);
        if (fields.size() != t.header.size()) {
            throw ConfigError(where(origin, line_no) + ": expected " + std::to_string(t.header.size()) +
                              " fields, found " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    return t;
}

BMGReport read_bmg_report_csv(std::istream& in, const std::string& origin) {
    const auto t = read_csv_table(in, origin);
    const std::vector<std::string> expected = {"candidate", "admitted", "mean_cv_nll", "best_alpha",
                                               "selected",  "margin",   "delta"};
    if (t.header != expected) throw ConfigError(origin + ": not a BMG report");
    BMGReport r;
    bool any_admitted = false;
    for (const auto& row : t.rows) {
        CandidateScore c;
        c.name = row[0];
        c.admitted = row[1] == "1";
        c.mean_cv_nll = parse_double_field(row[2], origin);
        c.best_alpha = parse_double_field(row[3], origin);
        if (c.admitted) {
            r.tier1_admitted.push_back(c.name);
            any_admitted = true;
        }
        if (row[4] == "1") {
            r.selected = c.name;
            r.alpha = c.best_alpha;
        }
        r.bmg_margin = parse_double_field(row[5], origin);
        r.delta_residual = parse_double_field(row[6], origin);
        r.candidates.push_back(std::move(c));
    }
    r.fallback_used = !any_admitted;
    return r;
}

SymmetricMatrix load_matrix(const std::string& path) {
    return with_input(path, [&](std::istream& in) { return read_matrix_csv(in, path); });
}

void save_matrix(const SymmetricMatrix& a, const std::string& path) {
    with_output(path, [&](std::ostream& out) { write_matrix_csv(a, out); });
}

Dataset load_dataset(const std::string& path) {
    return with_input(path, [&](std::istream& in) { return read_dataset_csv(in, path); });
}

void save_dataset(const Dataset& d, const std::string& path) {
    with_output(path, [&](std::ostream& out) { write_dataset_csv(d, out); });
}

void save_estimator(const EstimatorResult& r, const std::string& path) {
    with_output(path, [&](std::ostream& out) { write_estimator_csv(r, out); });
}

EstimatorResult load_estimator(const std::string& path) {
    return with_input(path, [&](std::istream& in) { return read_estimator_csv(in, path); });
}

}  // namespace symshrink
