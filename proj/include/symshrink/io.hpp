#pragma once

// Text formats.
//   matrix:    "M" then M lines of M comma-separated numbers
//   dataset:   "N,M" then N lines of M numbers
//   estimator: "estimator,alpha,group,flags", one value line, then a matrix block
// Numbers are written with 17 significant digits so files read back bit for bit.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "symshrink/bmg.hpp"
#include "symshrink/matrix.hpp"
#include "symshrink/shrinkage.hpp"

namespace symshrink {

void write_matrix_csv(const SymmetricMatrix& a, std::ostream& out);
// Rejects ragged rows, non-numeric fields and asymmetry beyond 1e-12 of the largest entry.
SymmetricMatrix read_matrix_csv(std::istream& in, const std::string& origin = "<stream>");

void write_dataset_csv(const Dataset& d, std::ostream& out);
// Returns the raw rows; callers center as needed.
Dataset read_dataset_csv(std::istream& in, const std::string& origin = "<stream>");

void write_estimator_csv(const EstimatorResult& r, std::ostream& out);
EstimatorResult read_estimator_csv(std::istream& in, const std::string& origin = "<stream>");

// Reads the rows written by write_bmg_report_csv (no prefix columns).
BMGReport read_bmg_report_csv(std::istream& in, const std::string& origin = "<stream>");

// Header plus rows of raw fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(std::istream& in, const std::string& origin = "<stream>");

double parse_double_field(const std::string& field, const std::string& context);

// File wrappers; failures to open or write raise IoError naming the path.
SymmetricMatrix load_matrix(const std::string& path);
void save_matrix(const SymmetricMatrix& a, const std::string& path);
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);
void save_estimator(const EstimatorResult& r, const std::string& path);
EstimatorResult load_estimator(const std::string& path);

}  // namespace symshrink
