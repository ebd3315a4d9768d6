#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "lar/adaptive.hpp"
#include "lar/oracle.hpp"
#include "lar/risk.hpp"
#include "lar/types.hpp"

namespace lar {

// Deterministic double formatting (%.17g): round-trip exact, byte-stable
// across runs.
std::string format_double(double value);

// --- dataset, CSV -----------------------------------------------------------
// Header "x0,...,x{d-1},y", one sample per line, features then response.
// Truth and noise metadata are not representable in CSV and are dropped.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

// --- dataset, binary --------------------------------------------------------
// Little-endian layout:
//   bytes 0..3   magic "LARD"
//   u32          version (currently 1)
//   u64, u64     n, d
//   u8           flags: bit0 truth present, bit1 noise_sigma present
//   f64[n*d]     features, row major
//   f64[n]       responses
//   f64[d]       truth, when flagged
//   f64          noise_sigma, when flagged
void write_dataset_binary(const Dataset& data, const std::string& path);
Dataset read_dataset_binary(const std::string& path);

// --- JSON forms -------------------------------------------------------------
nlohmann::json partition_to_json(const Partition& partition);
Partition partition_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const ModelParams& params);  // plain array
ModelParams model_from_json(const nlohmann::json& j);

// {k, epsilon?, bound?, bag_means[], bag_sizes[]}
nlohmann::json batch_to_json(const AggregateBatch& batch);

nlohmann::json risk_to_json(const RiskReport& report);

nlohmann::json trace_to_json(const RunTrace& trace, Algorithm algorithm,
                             std::size_t k, std::optional<double> epsilon);

// Per-step rows "algorithm,k,epsilon,step,test_loss"; epsilon column empty
// for non-private runs.
void write_trace_csv(const RunTrace& trace, Algorithm algorithm, std::size_t k,
                     std::optional<double> epsilon, const std::string& path);

}  // namespace lar
