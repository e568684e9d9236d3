#include "adiabat/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "adiabat/errors.hpp"

namespace adiabat::csv {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string format_number(long long value) { return std::to_string(value); }

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out_ += ',';
        out_ += header_[i];
    }
    out_ += '\n';
}

void Table::separator() {
    if (in_row_ >= header_.size()) throw Error(ErrorKind::Domain, "csv row longer than header");
    if (in_row_ > 0) out_ += ',';
    ++in_row_;
}

Table& Table::cell(double value) {
    separator();
    out_ += format_number(value);
    return *this;
}

Table& Table::cell(long long value) {
    separator();
    out_ += format_number(value);
    return *this;
}

Table& Table::cell(std::string_view text) {
    separator();
    out_ += text;
    return *this;
}

void Table::end_row() {
    if (in_row_ != header_.size()) throw Error(ErrorKind::Domain, "csv row shorter than header");
    out_ += '\n';
    in_row_ = 0;
}

std::vector<std::vector<std::string>> parse(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
        pos = eol + 1;
    }
    return rows;
}

}  // namespace adiabat::csv
