#include "balance/longtail.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "balance/csv.hpp"
#include "balance/rng.hpp"

namespace balance {

namespace {

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

LabeledDataset sample_mixture(const LongTailSpec& spec, const std::vector<std::size_t>& counts,
                              std::string_view stream) {
  const auto means = component_means(spec);
  std::size_t total = 0;
  for (auto c : counts) total += c;

  LabeledDataset out;
  out.samples = Tensor(total, spec.dim);
  out.labels.reserve(total);
  out.counts = counts;

  Rng rng(spec.seed, stream);
  std::size_t row = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i, ++row) {
      for (std::size_t d = 0; d < spec.dim; ++d) {
        out.samples(row, d) = means[k][d] + spec.stddev * rng.normal();
      }
      out.labels.push_back(static_cast<int>(k));
    }
  }
  return out;
}

}  // namespace

void validate(const LongTailSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (!(spec.rho >= 1.0)) throw std::invalid_argument("rho must be >= 1");
  if (spec.dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(spec.stddev > 0.0)) throw std::invalid_argument("stddev must be > 0");
  if (spec.means.empty() && spec.dim < 2) {
    throw std::invalid_argument("default circle geometry needs dim >= 2; give explicit means");
  }
  if (!spec.means.empty()) {
    if (spec.means.size() != spec.num_classes)
      throw std::invalid_argument("means must list one vector per class");
    for (const auto& m : spec.means)
      if (m.size() != spec.dim) throw std::invalid_argument("mean vector length must equal dim");
  }
  // The tail is n_max / rho before rounding; it must not round to zero.
  if (round_half_up(static_cast<double>(spec.n_max) / spec.rho) < 1) {
    throw std::invalid_argument("n_max " + std::to_string(spec.n_max) + " too small for rho " +
                                format_double(spec.rho) + ": tail class would be empty");
  }
}

std::vector<std::size_t> longtail_counts(const LongTailSpec& spec) {
  validate(spec);
  const double last = static_cast<double>(spec.num_classes - 1);
  std::vector<std::size_t> counts(spec.num_classes);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    const double n = static_cast<double>(spec.n_max) * std::pow(spec.rho, -static_cast<double>(k) / last);
    counts[k] = std::max<std::size_t>(1, round_half_up(n));
  }
  return counts;
}

std::vector<std::vector<double>> component_means(const LongTailSpec& spec) {
  if (!spec.means.empty()) return spec.means;
  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(spec.dim, 0.0));
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(spec.num_classes);
    means[k][0] = spec.radius * std::cos(angle);
    means[k][1] = spec.radius * std::sin(angle);
  }
  return means;
}

LabeledDataset make_longtail(const LongTailSpec& spec) {
  return sample_mixture(spec, longtail_counts(spec), "train");
}

LabeledDataset make_balanced_test(const LongTailSpec& spec, std::size_t per_class) {
  validate(spec);
  if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  return sample_mixture(spec, std::vector<std::size_t>(spec.num_classes, per_class), "test");
}

LabeledDataset drop_class(const LabeledDataset& data, int k) {
  LabeledDataset out;
  out.counts = data.counts;
  out.counts.at(static_cast<std::size_t>(k)) = 0;
  std::size_t kept = 0;
  for (int label : data.labels) kept += label != k;
  out.samples = Tensor(kept, data.dim());
  std::size_t row = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] == k) continue;
    for (std::size_t d = 0; d < data.dim(); ++d) out.samples(row, d) = data.samples(i, d);
    out.labels.push_back(data.labels[i]);
    ++row;
  }
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  std::vector<std::string> header;
  for (std::size_t d = 0; d < data.dim(); ++d) header.push_back("x" + std::to_string(d));
  header.push_back("label");
  CsvWriter w(path, header);
  std::vector<std::string> fields(header.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t d = 0; d < data.dim(); ++d) fields[d] = format_double(data.samples(i, d));
    fields.back() = std::to_string(data.labels[i]);
    w.row(fields);
  }
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path, std::size_t num_classes) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.back() != "label") {
    throw std::runtime_error(path.string() + ": expected trailing 'label' column");
  }
  const std::size_t dim = table.header.size() - 1;
  LabeledDataset out;
  out.samples = Tensor(table.rows.size(), dim);
  out.counts.assign(num_classes, 0);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.size() != dim + 1) throw std::runtime_error(path.string() + ": ragged row " + std::to_string(i + 2));
    for (std::size_t d = 0; d < dim; ++d) out.samples(i, d) = std::stod(r[d]);
    const int label = std::stoi(r[dim]);
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw std::runtime_error(path.string() + ": label out of range on row " + std::to_string(i + 2));
    }
    out.labels.push_back(label);
    ++out.counts[static_cast<std::size_t>(label)];
  }
  return out;
}

void write_dataset_metadata(const std::filesystem::path& path, const LongTailSpec& spec,
                            const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "K=" << spec.num_classes << '\n';
  out << "rho=" << format_double(spec.rho) << '\n';
  out << "n_max=" << spec.n_max << '\n';
  out << "dim=" << spec.dim << '\n';
  out << "seed=" << spec.seed << '\n';
  out << "counts=";
  for (std::size_t k = 0; k < data.counts.size(); ++k) out << (k ? "," : "") << data.counts[k];
  out << '\n';
  // rho is honoured only up to rounding of the per-class counts.
  std::size_t lo = data.counts.empty() ? 0 : data.counts[0], hi = lo;
  for (auto c : data.counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  out << "effective_rho=" << (lo ? format_double(static_cast<double>(hi) / static_cast<double>(lo)) : "inf")
      << '\n';
}

}  // namespace balance
