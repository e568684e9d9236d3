#pragma once

// Minimal CSV emission: comma separated, header row, LF endings, numbers with
// 17 significant digits so that every value round-trips.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace adiabat::csv {

std::string format_number(double value);
std::string format_number(long long value);

class Table {
public:
    explicit Table(std::vector<std::string> header);

    Table& cell(double value);
    Table& cell(long long value);
    Table& cell(int value) { return cell(static_cast<long long>(value)); }
    Table& cell(std::string_view text);
    void end_row();

    std::size_t columns() const { return header_.size(); }
    std::string str() const { return out_; }

private:
    void separator();

    std::vector<std::string> header_;
    std::string out_;
    std::size_t in_row_ = 0;
};

/// Splits CSV text (no quoting) into rows of fields; used by tests and readers.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace adiabat::csv
