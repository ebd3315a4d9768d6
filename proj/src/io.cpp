#include "lar/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace lar {
namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw ConfigError("io: cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw ConfigError("io: cannot open for reading: " + path);
  return in;
}

constexpr char kMagic[4] = {'L', 'A', 'R', 'D'};
constexpr std::uint32_t kBinaryVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("io: truncated binary dataset");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  validate(data);
  auto out = open_out(path, std::ios::out | std::ios::trunc);
  for (Eigen::Index j = 0; j < data.dimension(); ++j) out << "x" << j << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < data.sample_count(); ++i) {
    for (Eigen::Index j = 0; j < data.dimension(); ++j)
      out << format_double(data.features(i, j)) << ",";
    out << format_double(data.responses[i]) << "\n";
  }
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("io: empty csv: " + path);
  Eigen::Index d = static_cast<Eigen::Index>(
      std::count(line.begin(), line.end(), ',')); // header has d+1 columns

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Eigen::Index cols = 0;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::strtod(cell.c_str(), nullptr));
      ++cols;
    }
    if (cols != d + 1) throw ConfigError("io: ragged csv row in " + path);
    ++rows;
  }

  Dataset data;
  data.features.resize(rows, d);
  data.responses.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      data.features(i, j) = values[static_cast<std::size_t>(i * (d + 1) + j)];
    data.responses[i] = values[static_cast<std::size_t>(i * (d + 1) + d)];
  }
  return data;
}

void write_dataset_binary(const Dataset& data, const std::string& path) {
  validate(data);
  auto out = open_out(path, std::ios::out | std::ios::trunc | std::ios::binary);
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kBinaryVersion);
  write_raw(out, static_cast<std::uint64_t>(data.sample_count()));
  write_raw(out, static_cast<std::uint64_t>(data.dimension()));
  const std::uint8_t flags = (data.truth ? 1 : 0) | (data.noise_sigma ? 2 : 0);
  write_raw(out, flags);
  for (Eigen::Index i = 0; i < data.sample_count(); ++i)
    for (Eigen::Index j = 0; j < data.dimension(); ++j)
      write_raw(out, data.features(i, j));
  for (Eigen::Index i = 0; i < data.sample_count(); ++i)
    write_raw(out, data.responses[i]);
  if (data.truth)
    for (Eigen::Index j = 0; j < data.dimension(); ++j)
      write_raw(out, (*data.truth)[j]);
  if (data.noise_sigma) write_raw(out, *data.noise_sigma);
}

Dataset read_dataset_binary(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("io: not a dataset file: " + path);
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kBinaryVersion)
    throw ConfigError("io: unsupported dataset version in " + path);
  const auto n = static_cast<Eigen::Index>(read_raw<std::uint64_t>(in));
  const auto d = static_cast<Eigen::Index>(read_raw<std::uint64_t>(in));
  const auto flags = read_raw<std::uint8_t>(in);

  Dataset data;
  data.features.resize(n, d);
  data.responses.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      data.features(i, j) = read_raw<double>(in);
  for (Eigen::Index i = 0; i < n; ++i) data.responses[i] = read_raw<double>(in);
  if (flags & 1) {
    Eigen::VectorXd truth(d);
    for (Eigen::Index j = 0; j < d; ++j) truth[j] = read_raw<double>(in);
    data.truth = std::move(truth);
  }
  if (flags & 2) data.noise_sigma = read_raw<double>(in);
  return data;
}

nlohmann::json partition_to_json(const Partition& partition) {
  nlohmann::json j;
  j["k"] = partition.min_size;
  j["bags"] = partition.bags;
  return j;
}

Partition partition_from_json(const nlohmann::json& j) {
  return Partition::from_bags(
      j.at("bags").get<std::vector<std::vector<std::size_t>>>(),
      j.at("k").get<std::size_t>());
}

nlohmann::json model_to_json(const ModelParams& params) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < params.theta.size(); ++i)
    j.push_back(params.theta[i]);
  return j;
}

ModelParams model_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  ModelParams params;
  params.theta =
      Eigen::Map<const Eigen::VectorXd>(values.data(),
                                        static_cast<Eigen::Index>(values.size()));
  return params;
}

nlohmann::json batch_to_json(const AggregateBatch& batch) {
  nlohmann::json j;
  j["k"] = batch.partition.min_size;
  if (batch.privacy) {
    j["epsilon"] = batch.privacy->epsilon;
    j["bound"] = batch.privacy->bound;
  }
  j["bag_means"] = batch.bag_means;
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& bag : batch.partition.bags) sizes.push_back(bag.size());
  j["bag_sizes"] = std::move(sizes);
  return j;
}

nlohmann::json risk_to_json(const RiskReport& report) {
  nlohmann::json j;
  j["bias_sq"] = report.bias_sq;
  j["variance"] = report.variance;
  j["total"] = report.total;
  if (report.upper_bound) j["upper_bound"] = *report.upper_bound;
  return j;
}

nlohmann::json trace_to_json(const RunTrace& trace, Algorithm algorithm,
                             std::size_t k, std::optional<double> epsilon) {
  nlohmann::json j;
  j["algorithm"] = to_string(algorithm);
  j["k"] = k;
  if (epsilon) j["epsilon"] = *epsilon;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& record : trace.per_step) {
    nlohmann::json s;
    s["step"] = record.step;
    s["theta"] = model_to_json(record.theta);
    s["train_samples_used"] = record.train_samples_used;
    s["test_loss"] = record.test_loss;
    nlohmann::json histogram = nlohmann::json::object();
    for (const auto& [size, count] : record.bag_size_histogram)
      histogram[std::to_string(size)] = count;
    s["bag_size_histogram"] = std::move(histogram);
    steps.push_back(std::move(s));
  }
  j["per_step"] = std::move(steps);
  j["final_theta"] = model_to_json(trace.final_theta);
  return j;
}

void write_trace_csv(const RunTrace& trace, Algorithm algorithm, std::size_t k,
                     std::optional<double> epsilon, const std::string& path) {
  auto out = open_out(path, std::ios::out | std::ios::trunc);
  out << "algorithm,k,epsilon,step,test_loss\n";
  const std::string eps = epsilon ? format_double(*epsilon) : "";
  for (const auto& record : trace.per_step)
    out << to_string(algorithm) << "," << k << "," << eps << ","
        << record.step << "," << format_double(record.test_loss) << "\n";
}

}  // namespace lar
