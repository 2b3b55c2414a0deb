#include "depositum/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {
namespace {

struct Entry {
    int index;  // 0-based
    double value;
};

struct Row {
    int label;
    std::vector<Entry> entries;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

template <class T>
bool parse_number(std::string_view tok, T& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end;
}

Row parse_line(std::string_view line, std::size_t line_no, int max_dim) {
    Row row{};
    std::size_t pos = 0;
    bool have_label = false;
    int last_index = 0;
    while (pos < line.size()) {
        while (pos < line.size() && is_space(line[pos])) ++pos;
        if (pos >= line.size()) break;
        std::size_t end = pos;
        while (end < line.size() && !is_space(line[end])) ++end;
        const std::string_view tok = line.substr(pos, end - pos);
        const std::size_t column = pos + 1;

        if (!have_label) {
            double label = 0.0;
            if (!parse_number(tok, label) || !std::isfinite(label) || label != std::floor(label)) {
                throw ParseError(line_no, column, fmt::format("invalid label '{}'", tok));
            }
            row.label = static_cast<int>(label);
            have_label = true;
        } else {
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos) {
                throw ParseError(line_no, column, fmt::format("expected <index>:<value>, got '{}'", tok));
            }
            long index = 0;
            if (!parse_number(tok.substr(0, colon), index) || index < 1) {
                throw ParseError(line_no, column, fmt::format("invalid feature index in '{}'", tok));
            }
            if (max_dim > 0 && index > max_dim) {
                throw ParseError(line_no, column, fmt::format("feature index {} exceeds dimension {}", index, max_dim));
            }
            double value = 0.0;
            if (!parse_number(tok.substr(colon + 1), value) || !std::isfinite(value)) {
                throw ParseError(line_no, column + colon + 1, fmt::format("invalid feature value in '{}'", tok));
            }
            if (index <= last_index) {
                throw NonMonotoneIndex(fmt::format("line {}, column {}: index {} does not exceed previous index {}",
                                                   line_no, column, index, last_index));
            }
            last_index = static_cast<int>(index);
            row.entries.push_back({static_cast<int>(index - 1), value});
        }
        pos = end;
    }
    return row;
}

}  // namespace

Dataset Dataset::subset(const std::vector<int>& rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), dim());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= samples()) {
            throw IndexOutOfRange(fmt::format("row {} outside dataset of {} samples", rows[r], samples()));
        }
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(rows[r]);
        out.labels.push_back(labels[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

std::vector<int> Dataset::classes() const {
    std::set<int> distinct(labels.begin(), labels.end());
    return {distinct.begin(), distinct.end()};
}

bool Dataset::is_binary() const {
    return std::all_of(labels.begin(), labels.end(), [](int b) { return b == 1 || b == -1; });
}

Dataset parse_libsvm(std::istream& in, std::optional<int> dim) {
    std::vector<Row> rows;
    int max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        if (std::all_of(view.begin(), view.end(), is_space)) continue;
        Row row = parse_line(view, line_no, dim.value_or(0));
        if (!row.entries.empty()) max_index = std::max(max_index, row.entries.back().index + 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(line_no + 1, 1, "no samples");

    Dataset out;
    const int d = dim.value_or(max_index);
    out.features = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()), d);
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (const Entry& e : rows[r].entries) out.features(static_cast<Eigen::Index>(r), e.index) = e.value;
        out.labels.push_back(rows[r].label);
    }
    return out;
}

Dataset parse_libsvm(std::string_view text, std::optional<int> dim) {
    std::istringstream in{std::string(text)};
    return parse_libsvm(in, dim);
}

Dataset load_libsvm(const std::string& path, std::optional<int> dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_libsvm(in, dim);
}

std::string serialize_libsvm(const Dataset& data) {
    std::string out;
    for (Eigen::Index r = 0; r < data.samples(); ++r) {
        const int label = data.labels[static_cast<std::size_t>(r)];
        out += label > 0 ? fmt::format("+{}", label) : fmt::format("{}", label);
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            const double v = data.features(r, j);
            if (v != 0.0) out += fmt::format(" {}:{}", j + 1, v);
        }
        out += '\n';
    }
    return out;
}

Dataset synth_logistic(int dim, int samples, double separation, Rng& rng) {
    if (dim < 1 || samples < 1) throw InvalidProblem("synth_logistic needs dim >= 1 and samples >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    Eigen::VectorXd u(dim);
    for (int j = 0; j < dim; ++j) u[j] = normal(rng);
    u /= u.norm();

    Dataset out;
    out.features.resize(samples, dim);
    out.labels.resize(static_cast<std::size_t>(samples));
    for (int r = 0; r < samples; ++r) {
        const int b = coin(rng) ? 1 : -1;
        out.labels[static_cast<std::size_t>(r)] = b;
        for (int j = 0; j < dim; ++j) out.features(r, j) = b * separation * u[j] + normal(rng);
    }
    return out;
}

Dataset synth_classes(int dim, int samples, int classes, double separation, Rng& rng) {
    if (dim < 1 || samples < 1 || classes < 2) {
        throw InvalidProblem("synth_classes needs dim >= 1, samples >= 1 and classes >= 2");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, classes - 1);

    RowMatrix centres(classes, dim);
    for (int c = 0; c < classes; ++c) {
        for (int j = 0; j < dim; ++j) centres(c, j) = normal(rng);
        centres.row(c) *= separation / centres.row(c).norm();
    }

    Dataset out;
    out.features.resize(samples, dim);
    out.labels.resize(static_cast<std::size_t>(samples));
    for (int r = 0; r < samples; ++r) {
        const int c = pick(rng);
        out.labels[static_cast<std::size_t>(r)] = c;
        for (int j = 0; j < dim; ++j) out.features(r, j) = centres(c, j) + normal(rng);
    }
    return out;
}

}  // namespace depositum
